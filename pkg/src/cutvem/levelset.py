"""Analytic level-set fields and the config grammar for composing them.

Sign convention: phi < 0 is "inside". Union of inside regions is the
pointwise min, intersection the pointwise max. All fields evaluate with
numpy broadcasting, so phi(x, y) works for scalars and arrays alike.

Config grammar (stack machine, one `levelset = ...` line per token group):
    levelset = line nx ny c          phi = nx*x + ny*y - c
    levelset = circle cx cy r        phi = |x - c| - r
    levelset = flower cx cy r0 A k   phi = |x - c| - (r0 + A*cos(k*theta))
    levelset = union                 pop two, push min composite
    levelset = intersect             pop two, push max composite
"""

import numpy as np

from .errors import ConfigError


class LevelSetField:
    def __call__(self, x, y):
        raise NotImplementedError


class Line(LevelSetField):
    """phi = n . x - c; the zero set is a straight line."""

    def __init__(self, normal, offset):
        self.normal = (float(normal[0]), float(normal[1]))
        self.offset = float(offset)

    def __call__(self, x, y):
        return self.normal[0] * x + self.normal[1] * y - self.offset

    def __repr__(self):
        return f"line {self.normal[0]:g} {self.normal[1]:g} {self.offset:g}"


class Circle(LevelSetField):
    def __init__(self, cx, cy, r):
        self.cx, self.cy, self.r = float(cx), float(cy), float(r)

    def __call__(self, x, y):
        return np.hypot(x - self.cx, y - self.cy) - self.r

    def __repr__(self):
        return f"circle {self.cx:g} {self.cy:g} {self.r:g}"


class Flower(LevelSetField):
    """Radius modulated by a cosine: r0 + A*cos(k*theta) around a center.

    k = 0 reduces to a circle of radius r0 + A; k in {3, 5, 8} gives
    interfaces with progressively finer lobes.
    """

    def __init__(self, cx, cy, r0, amp, k):
        self.cx, self.cy = float(cx), float(cy)
        self.r0, self.amp, self.k = float(r0), float(amp), int(k)

    def __call__(self, x, y):
        dx = x - self.cx
        dy = y - self.cy
        theta = np.arctan2(dy, dx)
        return np.hypot(dx, dy) - (self.r0 + self.amp * np.cos(self.k * theta))

    def __repr__(self):
        return (f"flower {self.cx:g} {self.cy:g} {self.r0:g} "
                f"{self.amp:g} {self.k}")


class Union(LevelSetField):
    def __init__(self, a, b):
        self.a, self.b = a, b

    def __call__(self, x, y):
        return np.minimum(self.a(x, y), self.b(x, y))

    def __repr__(self):
        return f"union({self.a!r}, {self.b!r})"


class Intersection(LevelSetField):
    def __init__(self, a, b):
        self.a, self.b = a, b

    def __call__(self, x, y):
        return np.maximum(self.a(x, y), self.b(x, y))

    def __repr__(self):
        return f"intersect({self.a!r}, {self.b!r})"


def parse_levelset_program(lines):
    """Build a LevelSetField from a sequence of grammar lines."""
    stack = []
    for line in lines:
        toks = line.split()
        if not toks:
            continue
        kind, args = toks[0], toks[1:]
        try:
            if kind == "line":
                stack.append(Line((float(args[0]), float(args[1])), float(args[2])))
            elif kind == "circle":
                stack.append(Circle(*(float(a) for a in args)))
            elif kind == "flower":
                stack.append(Flower(float(args[0]), float(args[1]),
                                    float(args[2]), float(args[3]), int(args[4])))
            elif kind in ("union", "intersect"):
                if len(stack) < 2:
                    raise ConfigError(f"'{kind}' needs two level sets on the stack")
                b, a = stack.pop(), stack.pop()
                stack.append(Union(a, b) if kind == "union" else Intersection(a, b))
            else:
                raise ConfigError(f"unknown level-set kind {kind!r}")
        except (ValueError, IndexError):
            raise ConfigError(f"bad level-set line {line!r}") from None
    if len(stack) != 1:
        raise ConfigError(f"level-set program leaves {len(stack)} fields on the stack")
    return stack[0]
