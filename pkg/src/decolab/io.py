"""CSV output with a ``#`` metadata header, and flat key=value config files.

Header layout::

    # decolab <version>
    # command: <name>
    # generated: <UTC timestamp>        (omitted with timestamp=False)
    # [config]
    # key = value
    # [meta]
    # key = value
    col1,col2,...

Reading a file with a ``[config]`` section back as a config reproduces the run.
"""
import csv
import datetime as _dt
import io as _io
import json

import numpy as np

from .errors import ValidationError

FLOAT_FORMAT = "%.17g"


def _version():
    from importlib.metadata import PackageNotFoundError, version
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return FLOAT_FORMAT % v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v)
    return str(v)


def header_lines(command, config, meta=None, timestamp=True):
    lines = [f"# decolab {_version()}", f"# command: {command}"]
    if timestamp:
        now = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(f"# generated: {now}")
    lines.append("# [config]")
    lines += [f"# {k} = {format_value(v)}" for k, v in config.items()]
    if meta:
        lines.append("# [meta]")
        lines += [f"# {k} = {format_value(v)}" for k, v in meta.items()]
    return lines


def render_csv(columns, command, config, meta=None, timestamp=True):
    """Text of a CSV file; ``columns`` maps names to equal-length sequences."""
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValidationError("columns must have equal lengths")
    buf = _io.StringIO()
    buf.write("\n".join(header_lines(command, config, meta, timestamp)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*cols):
        writer.writerow([format_value(v.item() if hasattr(v, "item") else v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, command, config, meta=None, timestamp=True):
    text = render_csv(columns, command, config, meta, timestamp)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _parse_pairs(lines):
    out = {}
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line without '=': {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_config(text):
    """Flat key=value config; also accepts the ``[config]`` block of an emitted CSV."""
    lines = text.splitlines()
    if any(l.strip() == "# [config]" for l in lines):
        block, inside = [], False
        for l in lines:
            s = l.strip()
            if s == "# [config]":
                inside = True
                continue
            if not s.startswith("#"):
                break
            if inside:
                if s.startswith("# ["):
                    break
                block.append(s[1:])
        return _parse_pairs(block)
    return _parse_pairs(lines)


def read_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def read_csv(path):
    """Parse an emitted CSV into (config, meta, columns)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    config = parse_config(text)
    meta, section = {}, None
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            s = line[1:].strip()
            if s.startswith("["):
                section = s
            elif section == "[meta]" and "=" in s:
                k, v = s.split("=", 1)
                meta[k.strip()] = v.strip()
        else:
            body.append(line)
    rows = list(csv.reader(body))
    names, data = rows[0], rows[1:]
    columns = {}
    for j, n in enumerate(names):
        vals = [r[j] for r in data]
        try:
            columns[n] = np.array([float(v) for v in vals])
        except ValueError:
            columns[n] = np.array(vals)
    return config, meta, columns
