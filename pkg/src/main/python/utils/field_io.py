"""
Field snapshot files

Layout: the 4-byte magic b"NSFF", three little-endian uint32 values
(dim, n, component count), then every component's samples in row-major
order as little-endian float64.
"""
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..core.exceptions import GridMismatch
from ..models.fields import Grid, State

MAGIC = b"NSFF"
HEADER_DTYPE = np.dtype('<u4')
SAMPLE_DTYPE = np.dtype('<f8')

PathLike = Union[str, Path]


def write_snapshot(path: PathLike, grid: Grid, components: np.ndarray) -> Path:
    """
    Write stacked component samples of shape (count, *grid.shape)

    Returns:
        The written path
    """
    components = np.asarray(components, dtype=float)
    if components.ndim != grid.dim + 1 or components.shape[1:] != grid.shape:
        raise GridMismatch(
            f"Snapshot array of shape {components.shape} does not fit grid {grid.shape}"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([grid.dim, grid.n, components.shape[0]], dtype=HEADER_DTYPE)
    with open(path, 'wb') as handle:
        handle.write(MAGIC)
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(components, dtype=SAMPLE_DTYPE).tobytes())
    return path


def write_state(path: PathLike, state: State) -> Path:
    return write_snapshot(path, state.grid, state.to_array())


def read_snapshot(path: PathLike) -> Tuple[Grid, np.ndarray]:
    """
    Read a snapshot file

    Returns:
        (grid, samples of shape (count, *grid.shape))

    Raises:
        ValueError: If the file is not a snapshot or is truncated
    """
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path} is not a field snapshot (bad magic)")
    dim, n, count = (int(v) for v in np.frombuffer(raw, dtype=HEADER_DTYPE, count=3, offset=4))
    grid = Grid(dim, n)
    samples = np.frombuffer(raw, dtype=SAMPLE_DTYPE, offset=16)
    expected = count * n ** dim
    if samples.size != expected:
        raise ValueError(f"{path} holds {samples.size} samples, expected {expected}")
    return grid, samples.reshape((count,) + grid.shape).astype(float)


def read_state(path: PathLike) -> State:
    grid, samples = read_snapshot(path)
    if samples.shape[0] != grid.dim + 2:
        raise GridMismatch(f"{path} holds {samples.shape[0]} components, a state needs {grid.dim + 2}")
    return State.from_array(grid, samples)
