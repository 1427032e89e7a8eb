"""CSV output with 17 significant digits, the package's interchange format."""

import csv
import numbers


def fmt(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return format(float(value), ".17g")
    return str(value)


def write_rows(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def read_rows(stream):
    """Inverse of ``write_rows`` for numeric tables: (header, list of float rows)."""
    reader = csv.reader(stream)
    header = next(reader)
    return header, [[float(v) for v in row] for row in reader if row]
