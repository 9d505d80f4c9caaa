"""CSV output of metric traces and sweep tables."""
import csv
import io

from core.diagnostics import MetricsRecord

SWEEP_HEADER = ['B', 't_end', 't_end_per_B']


def _cell(value):
    # repr keeps every digit of a double.
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(fh, header, rows):
    writer = csv.writer(fh, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])


def format_metrics_csv(trace):
    buffer = io.StringIO()
    _write(buffer, MetricsRecord.field_names(), (record.values() for record in trace))
    return buffer.getvalue()


def write_metrics_csv(trace, path):
    """Header plus one row per record; floats at full precision."""
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        _write(fh, MetricsRecord.field_names(), (record.values() for record in trace))


def write_sweep_csv(rows, path):
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        _write(fh, SWEEP_HEADER, ((row.blocks, row.t_end, row.t_end_per_B) for row in rows))
