"""Dense tensors with reverse-mode automatic differentiation."""

import contextlib
import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionError, NumericalError

logger = logging.getLogger(__name__)

_state = threading.local()
_node_ids = itertools.count(1)


def is_grad_enabled() -> bool:
    """Check whether new ops are recorded for backward."""
    return getattr(_state, 'grad_enabled', True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording in the current thread."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def default_dtype() -> type:
    """Get the dtype used for newly constructed tensors in the current thread."""
    return getattr(_state, 'dtype', np.float32)


@contextlib.contextmanager
def double_precision() -> Iterator[None]:
    """Construct tensors in 64-bit in the current thread while active.

    Used by gradient verification; finite differences are meaningless at
    32-bit resolution.
    """
    previous = default_dtype()
    _state.dtype = np.float64
    try:
        yield
    finally:
        _state.dtype = previous


ArrayLike = Union[np.ndarray, float, int, Sequence]


class Tensor:
    """An n-dimensional array of reals that may take part in the gradient tape."""

    def __init__(self, data: ArrayLike, requires_grad: bool = False, dtype: Optional[type] = None):
        self.data = np.array(data, dtype=dtype or default_dtype())
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.tape_id: Optional[int] = next(_node_ids) if requires_grad else None
        self.op = 'leaf'
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Tuple['Tensor', ...],
                backward: Optional[Callable[[np.ndarray], None]], op: str) -> 'Tensor':
        """Wrap the result of an op, recording it on the tape when needed."""
        data = np.asarray(data)
        if not np.all(np.isfinite(data)):
            raise NumericalError(f"{op} produced non-finite values")
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.op = op
        tracked = is_grad_enabled() and any(p.requires_grad for p in parents)
        out.requires_grad = tracked
        if tracked:
            out._parents = parents
            out._backward = backward
            out.tape_id = next(_node_ids)
        else:
            out._parents = ()
            out._backward = None
            out.tape_id = None
        return out

    @classmethod
    def constant(cls, data: np.ndarray) -> 'Tensor':
        """Wrap an array without copying it; never tracked."""
        return cls.from_op(np.asarray(data), (), None, 'const')

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> 'Tensor':
        """Share the data, drop the graph."""
        return Tensor.constant(self.data)

    def accumulate_grad(self, grad: np.ndarray) -> None:
        """Add a gradient contribution; shapes must match exactly."""
        if grad.shape != self.data.shape:
            raise DimensionError(f"Gradient shape {grad.shape} does not match tensor shape {self.data.shape}")
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype)
        else:
            self.grad += grad.astype(self.data.dtype, copy=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        backward(self, grad)

    def __add__(self, other):
        from . import ops
        return ops.add(self, _as_tensor(other, self))

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, _as_tensor(other, self))

    def __mul__(self, other):
        from . import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"


def _as_tensor(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor.constant(np.full(like.shape, value, dtype=like.data.dtype))


class Parameter(Tensor):
    """A trainable leaf tensor with its SGD momentum buffer."""

    def __init__(self, data: ArrayLike, name: str = ''):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.momentum_buffer = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


@dataclass
class Tape:
    """Topologically ordered record of the graph that produced a tensor."""
    nodes: List[Tensor] = field(default_factory=list)

    @classmethod
    def record(cls, root: Tensor) -> 'Tape':
        """Collect every tracked ancestor of ``root``, parents before children."""
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)


def backward(loss: Tensor, grad: Optional[np.ndarray] = None) -> None:
    """Accumulate gradients of ``loss`` into every tracked ancestor.

    Nodes are visited once each in reverse topological order, so a tensor
    feeding several consumers receives the sum of their contributions.
    """
    if grad is None and loss.size != 1:
        raise DimensionError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        logger.debug("backward() called on an untracked tensor; nothing to do")
        return
    tape = Tape.record(loss)
    seed = np.ones_like(loss.data) if grad is None else np.asarray(grad)
    loss.accumulate_grad(seed)
    for node in reversed(tape.nodes):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
