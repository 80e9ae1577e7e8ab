"""Manufactured parabolic interface problems.

The ellipse family has, with r^2 = (x-x0)^2/a^2 + (y-y0)^2/b^2,

    u = r^p e^t / beta-                              inside the ellipse (r < 1)
    u = (r^p / beta+ - 1 / beta+ + 1 / beta-) e^t     outside

which is continuous across r = 1 and has continuous normal flux there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import InvalidArgument
from .mesh import Domain, InterfaceCurve, constant_curve

EXAMPLES = {
    "1": (1.0, 10.0),
    "2": (10.0, 1.0),
    "3a": (1.0, 10000.0),
    "3b": (10000.0, 1.0),
}


@dataclass(eq=False)
class ManufacturedProblem:
    """Exact solution and data of a parabolic interface problem.

    All callables take ``(x, y, t)`` with array ``x``, ``y``.  ``grad_u``
    returns a pair ``(u_x, u_y)``.  ``g`` defaults to the exact solution.
    """

    beta_minus: float
    beta_plus: float
    curve: InterfaceCurve
    u: Callable
    grad_u: Callable
    f: Callable
    u_t: Callable | None = None
    domain: Domain = field(default_factory=Domain)
    name: str = "custom"

    def g(self, x, y, t):
        return self.u(x, y, t)

    def u0(self, x, y):
        return self.u(x, y, 0.0)

    def beta(self, x, y):
        return np.where(self.curve.side(x, y) > 0, self.beta_plus, self.beta_minus)

    def flux(self, x, y, t):
        """beta * grad u with the coefficient of the exact subdomain."""
        b = self.beta(x, y)
        ux, uy = self.grad_u(x, y, t)
        return b * ux, b * uy


@dataclass(eq=False)
class EllipseProblem(ManufacturedProblem):
    x0: float = 0.0
    y0: float = 0.0
    a: float = np.pi / 4
    b: float = np.pi / 6
    p: float = 5.0

    def radius(self, x, y):
        return np.sqrt(((x - self.x0) / self.a) ** 2 + ((y - self.y0) / self.b) ** 2)

    def parametric(self, theta):
        """Points of the interface curve at the given angles."""
        return self.x0 + self.a * np.cos(theta), self.y0 + self.b * np.sin(theta)


def ellipse_problem(
    beta_minus: float,
    beta_plus: float,
    x0: float = 0.0,
    y0: float = 0.0,
    a: float = np.pi / 4,
    b: float = np.pi / 6,
    p: float = 5.0,
    name: str = "custom",
) -> EllipseProblem:
    if not (beta_minus > 0 and beta_plus > 0):
        raise InvalidArgument("diffusion coefficients must be positive")
    bm, bp = float(beta_minus), float(beta_plus)
    shift = 1.0 / bm - 1.0 / bp

    def s2(x, y):
        return ((x - x0) / a) ** 2 + ((y - y0) / b) ** 2

    def level_set(x, y):
        return np.sqrt(s2(x, y)) - 1.0

    def level_grad(x, y):
        r = np.sqrt(s2(x, y))
        return (x - x0) / (a * a * r), (y - y0) / (b * b * r)

    curve = InterfaceCurve(level_set, level_grad)

    def inside(x, y):
        return curve.side(x, y) < 0

    def rp(x, y):
        return s2(x, y) ** (p / 2)

    def grad_rp(x, y):
        s = s2(x, y)
        c = p * s ** (p / 2 - 1)
        return c * (x - x0) / a**2, c * (y - y0) / b**2

    def lap_rp(x, y):
        # p [2q s^(q-1) (X^2/a^4 + Y^2/b^4) + s^q (1/a^2 + 1/b^2)], q = p/2 - 1
        s = s2(x, y)
        q = p / 2 - 1
        X, Y = x - x0, y - y0
        quad = X**2 / a**4 + Y**2 / b**4
        return p * (2 * q * s ** (q - 1) * quad + s**q * (1 / a**2 + 1 / b**2))

    def u(x, y, t):
        r = rp(x, y)
        return np.where(inside(x, y), r / bm, r / bp + shift) * np.exp(t)

    def grad_u(x, y, t):
        gx, gy = grad_rp(x, y)
        inv = np.where(inside(x, y), 1.0 / bm, 1.0 / bp) * np.exp(t)
        return gx * inv, gy * inv

    def f(x, y, t):
        # u_t - beta * lap u = u - lap(r^p) e^t in both subdomains
        return u(x, y, t) - lap_rp(x, y) * np.exp(t)

    return EllipseProblem(
        beta_minus=bm, beta_plus=bp, curve=curve, u=u, grad_u=grad_u, f=f, u_t=u,
        name=name, x0=x0, y0=y0, a=a, b=b, p=p,
    )


def make_example(example_id) -> EllipseProblem:
    key = str(example_id).lower()
    if key not in EXAMPLES:
        raise InvalidArgument(f"unknown example {example_id!r}; choose from {sorted(EXAMPLES)}")
    return ellipse_problem(*EXAMPLES[key], name=f"example {key}")


def polynomial_problem(
    coeffs=(0.0, 1.0, 1.0, 0.0),
    time_coeff: float = 0.0,
    beta: float = 1.0,
    curve: InterfaceCurve | None = None,
) -> ManufacturedProblem:
    """u = c0 + c1 x + c2 y + c3 xy + c_t t with a constant coefficient.

    Harmonic in space, so f = u_t = c_t.  Any curve may be supplied; with equal
    coefficients the interface conditions are vacuous.
    """
    c0, c1, c2, c3 = (float(c) for c in coeffs)
    ct = float(time_coeff)

    def u(x, y, t):
        return c0 + c1 * x + c2 * y + c3 * x * y + ct * t + 0.0 * x

    def grad_u(x, y, t):
        return c1 + c3 * y + 0.0 * x, c2 + c3 * x + 0.0 * y

    def f(x, y, t):
        return ct + 0.0 * x

    return ManufacturedProblem(
        beta_minus=beta, beta_plus=beta, curve=curve or constant_curve(1.0),
        u=u, grad_u=grad_u, f=f, u_t=lambda x, y, t: ct + 0.0 * x, name="polynomial",
    )
