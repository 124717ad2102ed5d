"""Plain-text instance files.

Layout: header line ``NCP-INSTANCE v1 <kind>``, then named dense blocks.
A block is a line ``name rows cols`` followed by rows*cols decimal values in
row-major order (line wrapping is free).  Values are written with 17
significant digits so a write/read cycle is bit-exact for float64.
"""

from __future__ import annotations

import numpy as np

from .problems import CircularConeInstance, CompletionInstance

KIND_CIRCULAR = "circular-lp"
KIND_COMPLETION = "lowrank-completion"

_HEADER_PREFIX = "NCP-INSTANCE v1"


class InstanceFormatError(ValueError):
    """Parse failure; carries the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.reason = message


def _fmt(value: float) -> str:
    return "%.17g" % float(value)


def _block_lines(name: str, arr: np.ndarray) -> list:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    lines = [f"{name} {arr.shape[0]} {arr.shape[1]}"]
    for row in arr:
        lines.append(" ".join(_fmt(v) for v in row))
    return lines


def dumps(inst) -> str:
    if isinstance(inst, CircularConeInstance):
        lines = [f"{_HEADER_PREFIX} {KIND_CIRCULAR}"]
        lines += _block_lines("omega", np.array([[inst.omega]]))
        lines += _block_lines("seed", np.array([[float(inst.seed)]]))
        lines += _block_lines("A", inst.a)
        lines += _block_lines("b", inst.b.reshape(-1, 1))
        lines += _block_lines("c", inst.c.reshape(-1, 1))
        lines += _block_lines("x_hat", inst.x_hat.reshape(-1, 1))
    elif isinstance(inst, CompletionInstance):
        lines = [f"{_HEADER_PREFIX} {KIND_COMPLETION}"]
        lines += _block_lines("p", np.array([[inst.p]]))
        lines += _block_lines("r_max", np.array([[float(inst.r_max)]]))
        lines += _block_lines("seed", np.array([[float(inst.seed)]]))
        lines += _block_lines("mask", inst.mask)
        lines += _block_lines("g_obs", inst.g_obs)
        lines += _block_lines("planted", inst.planted)
    else:
        raise TypeError(f"cannot serialize {type(inst).__name__}")
    return "\n".join(lines) + "\n"


def write_instance(path, inst) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps(inst))


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0  # 0-based index of the next unread line

    def next_line(self, what: str) -> str:
        while self.pos < len(self.lines):
            raw = self.lines[self.pos]
            self.pos += 1
            if raw.strip():
                return raw
        raise InstanceFormatError(len(self.lines) + 1,
                                  f"unexpected end of file, expected {what}")

    def at_end(self) -> bool:
        return all(not ln.strip() for ln in self.lines[self.pos:])


def _read_block(reader: _Reader):
    header = reader.next_line("a block header")
    line_no = reader.pos
    parts = header.split()
    if len(parts) != 3:
        raise InstanceFormatError(line_no,
                                  f"expected 'name rows cols', got {header.strip()!r}")
    name = parts[0]
    try:
        rows, cols = int(parts[1]), int(parts[2])
    except ValueError:
        raise InstanceFormatError(line_no,
                                  f"non-integer block shape in {header.strip()!r}") from None
    if rows <= 0 or cols <= 0:
        raise InstanceFormatError(line_no, f"block {name!r} has empty shape")
    need = rows * cols
    values = []
    while len(values) < need:
        data_line = reader.next_line(f"{need - len(values)} more values for block {name!r}")
        for tok in data_line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise InstanceFormatError(
                    reader.pos, f"bad number {tok!r} in block {name!r}") from None
        if len(values) > need:
            raise InstanceFormatError(reader.pos,
                                      f"too many values in block {name!r}")
    return name, np.array(values).reshape(rows, cols), line_no


def loads(text: str):
    reader = _Reader(text)
    header = reader.next_line("the instance header")
    if not header.startswith(_HEADER_PREFIX + " "):
        raise InstanceFormatError(reader.pos,
                                  f"bad header {header.strip()!r}, expected "
                                  f"'{_HEADER_PREFIX} <kind>'")
    kind = header[len(_HEADER_PREFIX):].strip()
    if kind == KIND_CIRCULAR:
        wanted = {"omega", "seed", "A", "b", "c", "x_hat"}
    elif kind == KIND_COMPLETION:
        wanted = {"p", "r_max", "seed", "mask", "g_obs", "planted"}
    else:
        raise InstanceFormatError(reader.pos, f"unknown instance kind {kind!r}")

    blocks = {}
    lines_of = {}
    while not reader.at_end():
        name, arr, line_no = _read_block(reader)
        if name in blocks:
            raise InstanceFormatError(line_no, f"duplicate block {name!r}")
        if name not in wanted:
            raise InstanceFormatError(line_no,
                                      f"unexpected block {name!r} for kind {kind}")
        blocks[name] = arr
        lines_of[name] = line_no
    missing = sorted(wanted - set(blocks))
    if missing:
        raise InstanceFormatError(reader.pos,
                                  f"missing blocks: {', '.join(missing)}")

    def scalar(name):
        arr = blocks[name]
        if arr.shape != (1, 1):
            raise InstanceFormatError(lines_of[name], f"block {name!r} must be 1 1")
        return float(arr[0, 0])

    if kind == KIND_CIRCULAR:
        a = blocks["A"]
        m, n = a.shape
        for name, shape in (("b", (m, 1)), ("c", (n, 1)), ("x_hat", (n, 1))):
            if blocks[name].shape != shape:
                raise InstanceFormatError(
                    lines_of[name],
                    f"block {name!r} has shape {blocks[name].shape}, expected {shape}")
        return CircularConeInstance(
            n=n, m=m, omega=scalar("omega"), seed=int(scalar("seed")),
            a=a, b=blocks["b"].ravel(), c=blocks["c"].ravel(),
            x_hat=blocks["x_hat"].ravel())

    mask = blocks["mask"]
    n = mask.shape[0]
    for name in ("mask", "g_obs", "planted"):
        if blocks[name].shape != (n, n):
            raise InstanceFormatError(
                lines_of[name],
                f"block {name!r} has shape {blocks[name].shape}, expected {(n, n)}")
    return CompletionInstance(
        n=n, p=scalar("p"), r_max=int(scalar("r_max")), seed=int(scalar("seed")),
        mask=mask, g_obs=blocks["g_obs"], planted=blocks["planted"])


def read_instance(path):
    with open(path, "r", encoding="ascii") as fh:
        return loads(fh.read())
