"""Dense f32 tensor type used for every activation and weight in the engine.

Layout is row-major; rank-4 tensors follow the NHWC convention
(batch, height, width, channels).
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import DataError, ShapeError

__all__ = ["Tensor"]


def _check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in shape)
    if len(dims) == 0:
        raise ShapeError("tensor shape must have at least one dimension")
    for d in dims:
        if d < 1:
            raise ShapeError(f"tensor dims must be >= 1, got {dims}")
    return dims


class Tensor:
    """Immutable dense float32 array with an explicit shape.

    Construct via :meth:`filled` or :meth:`from_values`; the wrapped buffer
    is marked read-only so tensors can be shared freely across threads.
    """

    __slots__ = ("_array",)

    def __init__(self, array: np.ndarray):
        arr = np.ascontiguousarray(array, dtype=np.float32)
        _check_shape(arr.shape)
        if not np.isfinite(arr).all():
            raise DataError("tensor contains non-finite values")
        arr.flags.writeable = False
        self._array = arr

    @classmethod
    def filled(cls, shape: Sequence[int], value: float) -> "Tensor":
        """Tensor of `shape` with every element equal to `value`."""
        dims = _check_shape(shape)
        return cls(np.full(dims, value, dtype=np.float32))

    @classmethod
    def from_values(cls, shape: Sequence[int], values: Sequence[float]) -> "Tensor":
        """Tensor of `shape` from a flat row-major sequence of values."""
        dims = _check_shape(shape)
        arr = np.asarray(values, dtype=np.float32).reshape(-1)
        expected = int(np.prod(dims))
        if arr.size != expected:
            raise ShapeError(
                f"got {arr.size} values for shape {dims} (expected {expected})"
            )
        return cls(arr.reshape(dims))

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def size(self) -> int:
        return int(self._array.size)

    @property
    def data(self) -> np.ndarray:
        """Flat row-major read-only view of the elements."""
        return self._array.reshape(-1)

    @property
    def array(self) -> np.ndarray:
        """Shaped read-only view of the elements."""
        return self._array

    def get(self, *index: int) -> float:
        """Element at a multi-dimensional index."""
        if len(index) != self.rank:
            raise ShapeError(f"index {index} does not match rank {self.rank}")
        return float(self._array[index])

    def tolist(self) -> list:
        return self._array.tolist()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"
