"""Step-machine plumbing.

Each procedure is a :class:`Frame` whose ``step`` performs exactly one atomic
step and reports what happened: ``None`` (advanced), :data:`SPIN` (busy-wait,
no progress), :class:`Call` (push a sub-procedure) or :class:`Return`.
A :class:`Process` owns the frame stack; the stack is volatile and dropped on
a crash.
"""

from __future__ import annotations

from typing import Any, Optional

from .memory import Memory, VolatileEnv


class _Spin:
    __slots__ = ()

    def __repr__(self) -> str:
        return "SPIN"


SPIN = _Spin()


class Call:
    __slots__ = ("frame",)

    def __init__(self, frame: "Frame") -> None:
        self.frame = frame


class Return:
    __slots__ = ("value",)

    def __init__(self, value: Any) -> None:
        self.value = value


class Frame:
    __slots__ = ()

    def label(self) -> str:
        raise NotImplementedError

    def step(self, p: "Process") -> Any:
        raise NotImplementedError

    def resume(self, p: "Process", value: Any) -> Any:
        """Called when a sub-procedure returns; consumes no step."""
        return None

    def key(self) -> tuple:
        return (type(self).__name__,) + tuple(
            _freeze(getattr(self, s)) for s in type(self).__slots__)

    def copy(self) -> "Frame":
        f = object.__new__(type(self))
        for s in type(self).__slots__:
            setattr(f, s, getattr(self, s))
        return f


def _freeze(v: Any) -> Any:
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    if isinstance(v, dict):
        return tuple(sorted((k, _freeze(x)) for k, x in v.items()))
    if isinstance(v, set):
        return frozenset(v)
    return v


class Process:
    """One actor: application process ``pid >= 1`` or the system actor 0."""

    __slots__ = ("pid", "mem", "n", "independent", "env", "stack", "hooks",
                 "result", "finished")

    def __init__(self, pid: int, mem: Memory, hooks: Any = None) -> None:
        self.pid = pid
        self.mem = mem
        self.n = mem.n
        self.independent = mem.independent
        self.env = VolatileEnv(pid)
        self.stack: list[Frame] = []
        self.hooks = hooks
        self.result: Any = None
        self.finished = False

    @property
    def busy(self) -> bool:
        return bool(self.stack)

    def start(self, frame: Frame) -> None:
        self.stack = [frame]
        self.finished = False
        self.result = None

    def label(self) -> Optional[str]:
        return self.stack[-1].label() if self.stack else None

    def crash_reset(self) -> None:
        self.stack = []
        self.env.crash_reset()
        self.finished = False
        self.result = None

    def step(self) -> bool:
        """Run one atomic step. Returns False for a spin."""
        stack = self.stack
        r = stack[-1].step(self)
        if r is None:
            return True
        if r is SPIN:
            return False
        if type(r) is Call:
            stack.append(r.frame)
            return True
        value = r.value
        stack.pop()
        while stack:
            r = stack[-1].resume(self, value)
            if r is None:
                return True
            if type(r) is Call:
                stack.append(r.frame)
                return True
            value = r.value
            stack.pop()
        self.result = value
        self.finished = True
        return True

    def clone(self, mem: Memory, hooks: Any = None) -> "Process":
        p = Process.__new__(Process)
        p.pid = self.pid
        p.mem = mem
        p.n = self.n
        p.independent = self.independent
        p.env = self.env.copy()
        p.stack = [f.copy() for f in self.stack]
        p.hooks = hooks
        p.result = self.result
        p.finished = self.finished
        return p

    def fingerprint(self) -> tuple:
        return (
            tuple(f.key() for f in self.stack),
            tuple(sorted((k, _freeze(v)) for k, v in self.env.items())),
            repr(self.env.pc),
            self.finished,
            self.result,
        )
