"""Polynomial and Gaussian-integral primitives for the closed-form solutions.

Laguerre polynomials, two-variable Hermite polynomials, and the two
complex-plane Gaussian integral formulas

  int d2b/pi b^n b*^m exp(zeta|b|^2 + xi b + eta b*)
      = exp(-xi eta/zeta) sum_k n! m! xi^(m-k) eta^(n-k)
        / (k! (n-k)! (m-k)! (-zeta)^(m+n-k+1))

  int d2z/pi exp(zeta|z|^2 + xi z + eta z* + f z^2 + g z*^2)
      = (zeta^2 - 4 f g)^(-1/2)
        exp[(-zeta xi eta + f eta^2 + g xi^2) / (zeta^2 - 4 f g)]

Both formulas are evaluated verbatim in ``analytic_continuation`` mode,
which is how the channel routes use them outside the convergent regime.
"""

import cmath
import math
from fractions import Fraction

from .errors import DegreeTooLarge, DivergentWithoutContinuation, SingularDenominator

_MAX_DEGREE = 200
_EXACT_DEGREE = 20  # exact rational arithmetic below, recurrences above
_MODES = ("convergent", "analytic_continuation")


def _check_degree(value: int, limit: int, name: str) -> None:
    if not isinstance(value, int) or value < 0:
        raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")
    if value > limit:
        raise DegreeTooLarge(f"{name}={value} exceeds the supported limit {limit}")


def _rational_powers(z: complex, top: int) -> list:
    """[(Re z^k, Im z^k)] as exact Fractions for k = 0..top.

    Low-degree polynomial sums suffer catastrophic cancellation in float
    (the binomial terms dwarf the result); exact rationals over the exactly
    representable float input make the returned value correctly rounded.
    """
    re, im = Fraction(z.real), Fraction(z.imag)
    powers = [(Fraction(1), Fraction(0))]
    for _ in range(top):
        pr, pi = powers[-1]
        powers.append((pr * re - pi * im, pr * im + pi * re))
    return powers


def _exact_laguerre(l: int, x: complex) -> complex:
    powers = _rational_powers(-complex(x), l)
    re = Fraction(0)
    im = Fraction(0)
    for k in range(l + 1):
        coeff = Fraction(math.comb(l, k), math.factorial(k))
        re += coeff * powers[k][0]
        im += coeff * powers[k][1]
    return complex(float(re), float(im))


def laguerre(l: int, x: complex) -> complex:
    """Laguerre polynomial L_l(x) = sum_k C(l, l-k) (-x)^k / k!."""
    _check_degree(l, _MAX_DEGREE, "l")
    x = complex(x)
    if l <= _EXACT_DEGREE:
        return _exact_laguerre(l, x)
    # upward recurrence (k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1},
    # seeded from the exact values so the two regimes join consistently
    prev = _exact_laguerre(_EXACT_DEGREE - 1, x)
    cur = _exact_laguerre(_EXACT_DEGREE, x)
    for k in range(_EXACT_DEGREE, l):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


def hermite2(m: int, n: int, x: complex, y: complex) -> complex:
    """Two-variable Hermite polynomial
    H_{m,n}(x,y) = sum_l m! n! (-1)^l / (l! (m-l)! (n-l)!) x^(m-l) y^(n-l).
    """
    _check_degree(m, _MAX_DEGREE, "m")
    _check_degree(n, _MAX_DEGREE, "n")
    x = complex(x)
    y = complex(y)
    if max(m, n) <= _EXACT_DEGREE:
        xp = _rational_powers(x, m)
        yp = _rational_powers(y, n)
        re = Fraction(0)
        im = Fraction(0)
        for l in range(min(m, n) + 1):
            coeff = (-1) ** l * (
                math.factorial(m)
                * math.factorial(n)
                // (math.factorial(l) * math.factorial(m - l) * math.factorial(n - l))
            )
            ar, ai = xp[m - l]
            br, bi = yp[n - l]
            re += coeff * (ar * br - ai * bi)
            im += coeff * (ar * bi + ai * br)
        return complex(float(re), float(im))
    # row recurrence H_{i+1,j} = x H_{i,j} - j H_{i,j-1}, row 0 is y^j
    row = [y**j for j in range(n + 1)]
    for _ in range(m):
        new = [x * row[0]]
        for j in range(1, n + 1):
            new.append(x * row[j] - j * row[j - 1])
        row = new
    return row[n]


def laguerre_hermite_identity_residual(l: int, x: complex, y: complex) -> float:
    """|L_l(xy) - (-1)^l H_{l,l}(x,y) / l!|, the cross-definition consistency check."""
    _check_degree(l, 50, "l")
    lhs = laguerre(l, complex(x) * complex(y))
    rhs = (-1) ** l * hermite2(l, l, x, y) / math.factorial(l)
    return abs(lhs - rhs)


def moment_term_coefficients(n: int, m: int, zeta: complex) -> list:
    """Coefficients c_k = n! m! / (k! (n-k)! (m-k)! (-zeta)^(m+n-k+1)).

    Shared between the scalar moment integral and the channel route that
    applies the same sum with operator-valued monomials.
    """
    _check_degree(n, _MAX_DEGREE, "n")
    _check_degree(m, _MAX_DEGREE, "m")
    zeta = complex(zeta)
    out = []
    for k in range(min(n, m) + 1):
        num = (
            math.factorial(n)
            * math.factorial(m)
            // (math.factorial(k) * math.factorial(n - k) * math.factorial(m - k))
        )
        out.append((k, num / (-zeta) ** (m + n - k + 1)))
    return out


def gaussian_moment_integral(
    n: int,
    m: int,
    zeta: complex,
    xi: complex,
    eta: complex,
    mode: str = "convergent",
) -> complex:
    """Closed form of int d2b/pi b^n b*^m exp(zeta|b|^2 + xi b + eta b*)."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    zeta = complex(zeta)
    xi = complex(xi)
    eta = complex(eta)
    if mode == "convergent" and zeta.real >= 0:
        raise DivergentWithoutContinuation(
            f"Re zeta = {zeta.real} >= 0; request analytic_continuation explicitly"
        )
    total = 0j
    for k, coeff in moment_term_coefficients(n, m, zeta):
        total += coeff * xi ** (m - k) * eta ** (n - k)
    return cmath.exp(-xi * eta / zeta) * total


def quadratic_form_negative_definite(zeta: complex, f: complex, g: complex) -> bool:
    """True when Re(zeta|z|^2 + f z^2 + g z*^2) is negative definite over (Re z, Im z)."""
    zeta, f, g = complex(zeta), complex(f), complex(g)
    axx = zeta.real + (f + g).real
    ayy = zeta.real - (f + g).real
    axy = (g - f).imag
    half_trace = 0.5 * (axx + ayy)
    radius = math.hypot(0.5 * (axx - ayy), axy)
    return half_trace + radius < 0


def gaussian_quadratic_integral(
    zeta: complex,
    xi: complex,
    eta: complex,
    f: complex,
    g: complex,
    mode: str = "convergent",
    branch_sign: int = 1,
) -> complex:
    """Closed form of int d2z/pi exp(zeta|z|^2 + xi z + eta z* + f z^2 + g z*^2).

    The square root is taken on the principal branch; ``branch_sign`` lets a
    caller continuing through the divergent regime select the other sheet.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if branch_sign not in (1, -1):
        raise ValueError("branch_sign must be +1 or -1")
    zeta, xi, eta = complex(zeta), complex(xi), complex(eta)
    f, g = complex(f), complex(g)
    denom = zeta * zeta - 4.0 * f * g
    if abs(denom) < 1e-14:
        raise SingularDenominator(f"|zeta^2 - 4fg| = {abs(denom)} is numerically singular")
    if mode == "convergent" and not quadratic_form_negative_definite(zeta, f, g):
        raise DivergentWithoutContinuation(
            "quadratic form is not negative definite; request analytic_continuation"
        )
    exponent = (-zeta * xi * eta + f * eta * eta + g * xi * xi) / denom
    return branch_sign * denom ** (-0.5) * cmath.exp(exponent)
