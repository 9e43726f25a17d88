"""Independent ground truth for the channel routes.

Direct fixed-step RK4 integration of the diffusion master equation

    d rho/dt = -kappa (a'a rho - a' rho a - a rho a' + rho a a')

and brute-force tensor-rule quadrature over a square patch of the complex
plane (with the 1/pi measure folded in).  Both are deliberately dumb and
deterministic; everything cleverer in the package is validated against them.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NotDecayed, StepTooLarge, TruncationLoss
from .fock import DensityMatrix, annihilation_matrix

#: accuracy contract for the fixed-step integrator
MAX_KAPPA_DT = 0.01

#: top Fock level occupation beyond which integration results are rejected
TOP_LEVEL_OCCUPATION_LIMIT = 1e-6

_RULES = ("midpoint", "gauss_legendre_tensor")


@dataclass(frozen=True)
class ComplexGrid:
    """Rectangular sampling of the complex plane: square [-radius, radius]^2."""

    radius: float
    points_per_axis: int
    rule: str = "gauss_legendre_tensor"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.points_per_axis < 2:
            raise ValueError(f"points_per_axis must be >= 2, got {self.points_per_axis}")
        if self.rule not in _RULES:
            raise ValueError(f"rule must be one of {_RULES}, got {self.rule!r}")

    def axis_nodes_weights(self):
        n, r = self.points_per_axis, self.radius
        if self.rule == "midpoint":
            h = 2.0 * r / n
            x = -r + h * (np.arange(n) + 0.5)
            w = np.full(n, h)
        else:
            x, w = np.polynomial.legendre.leggauss(n)
            x = x * r
            w = w * r
        return x, w

    def nodes_weights(self):
        """Flattened complex nodes x + i y and tensor-product weights."""
        x, wx = self.axis_nodes_weights()
        nodes = (x[:, None] + 1j * x[None, :]).ravel()
        weights = (wx[:, None] * wx[None, :]).ravel()
        return nodes, weights

    def boundary_ring(self) -> np.ndarray:
        """Sample points along the square's edges, for decay checks."""
        x, _ = self.axis_nodes_weights()
        r = self.radius
        return np.concatenate(
            [x + 1j * r, x - 1j * r, r + 1j * x, -r + 1j * x]
        )

    def refined(self) -> "ComplexGrid":
        return ComplexGrid(self.radius, 2 * self.points_per_axis, self.rule)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    refinement_estimate: Optional[float] = None


def quadrature_2d(
    f: Callable[[np.ndarray], np.ndarray],
    grid: ComplexGrid,
    decay_tol: float = 1e-12,
    estimate_refinement: bool = True,
) -> QuadratureResult:
    """Tensor-rule value of int d2b/pi f(b) over the grid's square patch.

    ``f`` must accept an ndarray of complex points.  Raises NotDecayed when
    |f| on the square's boundary exceeds decay_tol relative to the larger of
    1 and the interior maximum.  The refinement estimate is the change under
    doubling points_per_axis.
    """

    def tensor_sum(g: ComplexGrid) -> complex:
        nodes, weights = g.nodes_weights()
        vals = np.asarray(f(nodes))
        return complex((weights * vals).sum() / np.pi)

    nodes, weights = grid.nodes_weights()
    vals = np.asarray(f(nodes))
    interior_max = float(np.max(np.abs(vals)))
    boundary_max = float(np.max(np.abs(np.asarray(f(grid.boundary_ring())))))
    if boundary_max > decay_tol * max(1.0, interior_max):
        raise NotDecayed(
            f"boundary magnitude {boundary_max:.3e} exceeds "
            f"{decay_tol:.1e} x max(1, interior {interior_max:.3e})"
        )
    value = complex((weights * vals).sum() / np.pi)
    estimate = None
    if estimate_refinement:
        estimate = abs(tensor_sum(grid.refined()) - value)
    return QuadratureResult(value=value, refinement_estimate=estimate)


def _rhs_matrix(rho: np.ndarray, kappa: float, a: np.ndarray, ad: np.ndarray,
                n_diag: np.ndarray, aad_diag: np.ndarray) -> np.ndarray:
    # -kappa (a'a rho - a' rho a - a rho a' + rho a a'); the diagonal factors
    # a'a and a a' act as cheap row/column scalings.
    return -kappa * (
        n_diag[:, None] * rho
        - ad @ rho @ a
        - a @ rho @ ad
        + rho * aad_diag[None, :]
    )


def lindblad_rhs(rho: DensityMatrix, kappa: float) -> DensityMatrix:
    """Right-hand side of the diffusion master equation at the given state."""
    dim = rho.dim
    a = annihilation_matrix(dim)
    ad = a.conj().T
    n_diag = np.arange(dim, dtype=np.float64)
    aad_diag = np.diag(a @ ad).real
    return DensityMatrix(
        _rhs_matrix(rho.entries, kappa, a, ad, n_diag, aad_diag),
        label="lindblad_rhs",
    )


def integrate_master_equation(
    rho0: DensityMatrix,
    kappa: float,
    t_final: float,
    dt: float,
) -> DensityMatrix:
    """Classical fixed-step RK4 evolution of rho0 to time t_final.

    The step is shrunk (never grown) so an integer number of steps lands
    exactly on t_final.  kappa*dt must not exceed 0.01.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if t_final < 0:
        raise ValueError(f"t_final must be >= 0, got {t_final}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final == 0:
        return DensityMatrix(rho0.entries.copy(), label="ode_oracle")
    if dt > t_final:
        raise ValueError(f"dt={dt} exceeds t_final={t_final}")
    if kappa * dt > MAX_KAPPA_DT * (1 + 1e-12):
        raise StepTooLarge(f"kappa*dt = {kappa * dt} violates the {MAX_KAPPA_DT} contract")

    n_steps = max(1, int(np.ceil(t_final / dt - 1e-12)))
    h = t_final / n_steps

    dim = rho0.dim
    a = annihilation_matrix(dim)
    ad = a.conj().T
    n_diag = np.arange(dim, dtype=np.float64)
    aad_diag = np.diag(a @ ad).real

    rho = rho0.entries.copy()
    for _ in range(n_steps):
        k1 = _rhs_matrix(rho, kappa, a, ad, n_diag, aad_diag)
        k2 = _rhs_matrix(rho + 0.5 * h * k1, kappa, a, ad, n_diag, aad_diag)
        k3 = _rhs_matrix(rho + 0.5 * h * k2, kappa, a, ad, n_diag, aad_diag)
        k4 = _rhs_matrix(rho + h * k3, kappa, a, ad, n_diag, aad_diag)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    top = float(rho[dim - 1, dim - 1].real)
    if top > TOP_LEVEL_OCCUPATION_LIMIT:
        raise TruncationLoss(
            f"top-level occupation {top:.3e} exceeds {TOP_LEVEL_OCCUPATION_LIMIT:.1e}; "
            "increase the cutoff"
        )
    return DensityMatrix(rho, label="ode_oracle")
