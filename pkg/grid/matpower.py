"""Reader and writer for MATPOWER case files (the PGLib-OPF distribution format).

Only the bus, gen, branch and gencost matrices plus baseMVA are kept. Any
other ``mpc.*`` field is skipped, never rejected, so every PGLib v17.08 case
loads.
"""
import logging
import re
from pathlib import Path

from .exceptions import CaseEncodingError, MalformedRow, MissingTable, NonNumericToken
from .network import TABLE_COLUMNS, RawCase

logger = logging.getLogger(__name__)

_FUNCTION_HEADER = re.compile(r'^function\s+\w+\s*=\s*(\w+)')
_BASE_MVA = re.compile(r'^mpc\.baseMVA\s*=\s*([^;]+);?')
_MATRIX_START = re.compile(r'^mpc\.(\w+)\s*=\s*\[(.*)$')
_TOKEN_SPLIT = re.compile(r'[\s,]+')


def _strip_comment(line):
    # MATPOWER cases never quote a '%' inside a numeric matrix
    return line.split('%', 1)[0].strip()


def _parse_number(token, lineno, column):
    try:
        return float(token)
    except ValueError:
        raise NonNumericToken(lineno, column, token) from None


def _parse_rows(fragment, lineno):
    """Split one line of matrix body into rows of floats"""
    rows = []
    for piece in fragment.split(';'):
        piece = piece.strip()
        if not piece:
            continue
        tokens = [t for t in _TOKEN_SPLIT.split(piece) if t]
        rows.append(tuple(
            _parse_number(token, lineno, column)
            for column, token in enumerate(tokens, start=1)
        ))
    return rows


def parse_case(text, default_name=''):
    """Parse MATPOWER case text into a RawCase"""
    case_name = default_name
    base_mva = None
    tables = {}
    current = None
    current_rows = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line)
        if not line:
            continue

        if current is None:
            header = _FUNCTION_HEADER.match(line)
            if header:
                case_name = header.group(1)
                continue

            base = _BASE_MVA.match(line)
            if base:
                base_mva = _parse_number(base.group(1).strip(), lineno, 1)
                continue

            matrix = _MATRIX_START.match(line)
            if not matrix:
                continue
            current = matrix.group(1)
            current_rows = []
            line = matrix.group(2)

        body, closed = line, False
        if ']' in line:
            body, closed = line.split(']', 1)[0], True

        if current in TABLE_COLUMNS:
            for row in _parse_rows(body, lineno):
                if len(row) < TABLE_COLUMNS[current]:
                    raise MalformedRow(
                        current, lineno,
                        f"expected at least {TABLE_COLUMNS[current]} columns, got {len(row)}",
                    )
                current_rows.append(row)

        if closed:
            if current in TABLE_COLUMNS:
                tables[current] = tuple(current_rows)
            current = None

    if current is not None:
        raise MalformedRow(current, lineno, 'matrix is not closed')

    for name in ('bus', 'gen', 'branch', 'gencost'):
        if name not in tables:
            raise MissingTable(name)
    if base_mva is None:
        raise MissingTable('baseMVA')
    if base_mva <= 0:
        raise MalformedRow('baseMVA', 0, f"base_mva must be positive, got {base_mva}")

    logger.debug(
        f"Parsed case {case_name}: {len(tables['bus'])} buses, "
        f"{len(tables['gen'])} generators, {len(tables['branch'])} branches"
    )

    return RawCase(
        case_name=case_name,
        base_mva=base_mva,
        bus=tables['bus'],
        gen=tables['gen'],
        branch=tables['branch'],
        gencost=tables['gencost'],
    )


def load_case(path):
    """Read a case file from disk; the file stem names headerless cases"""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except UnicodeDecodeError as e:
        raise CaseEncodingError(path, e.reason) from e
    return parse_case(text, default_name=path.stem)


def _format_number(value):
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def serialize_case(raw):
    """Write a RawCase back out as MATPOWER text that parse_case reads losslessly"""
    lines = [
        f"function mpc = {raw.case_name or 'case'}",
        "mpc.version = '2';",
        f"mpc.baseMVA = {_format_number(raw.base_mva)};",
    ]
    for name in ('bus', 'gen', 'branch', 'gencost'):
        lines.append('')
        lines.append(f"mpc.{name} = [")
        for row in raw.table(name):
            lines.append('\t' + '\t'.join(_format_number(v) for v in row) + ';')
        lines.append('];')
    return '\n'.join(lines) + '\n'
