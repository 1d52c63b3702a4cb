"""Primal-dual solver for the unique continuation problem.

The discrete problem couples a primal field u_h (full space) with a dual
multiplier z_h (zero-trace space) through

    [ S + M_omega   B^T ] [u]   [ (q + dq, phi)_omega ]
    [ B            -A0  ] [z] = [ 0                   ]

where S is the mesh-dependent regularization, M_omega the data-region
mass, B the mixed stiffness and A0 the Dirichlet stiffness.  Testing the
system with (u, -z) reproduces the squared stability norm, which is what
guarantees solvability and is checked numerically by `verify_positivity`.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fem import (
    FeSpace,
    FormMatrix,
    assemble_load_region,
    assemble_region_mass,
    assemble_stiffness,
    assemble_stabilization,
    build_space,
)
from .fields import FeField, OscillatoryField, ScaledField, ZeroField, _field_values
from .geometry import Geometry
from .mesh import ALL_REGIONS, Mesh, Region
from .sparse import achieved_residual, compose_saddle, solve_direct


@dataclass(frozen=True)
class PerturbationSpec:
    mode: str = "none"  # none | oscillatory | nodal_noise
    epsilon: float = 0.0
    kappa: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("none", "oscillatory", "nodal_noise"):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class UcProblem:
    """Problem description: geometry, order, exact solution and data noise.

    `exact` is any field with value/gradient methods (harmonic monomial,
    affine field, or ZeroField for pure-noise studies).  `tikhonov_hmin`
    activates the stagnation variant: the Tikhonov scale becomes
    max(h, tikhonov_hmin) instead of h.
    """

    geometry: Geometry
    k: int
    exact: object
    perturbation: PerturbationSpec = PerturbationSpec()
    tikhonov_hmin: float | None = None


@dataclass
class Perturbation:
    """Data perturbation with a quadrature-certified L2(omega) norm."""

    mode: str
    epsilon: float
    field: object
    norm_l2_omega: float
    kappa: float = 0.0
    seed: int = 0

    def __call__(self, points):
        return _field_values(self.field, points)


@dataclass
class SolveDiagnostics:
    solve_residual: float
    triple_norm_parts: dict
    h: float
    tikhonov_scale: float
    n_dofs_primal: int
    n_dofs_dual: int


@dataclass
class UcSolution:
    u: np.ndarray
    z: np.ndarray
    diagnostics: SolveDiagnostics
    primal_space: FeSpace = dc_field(repr=False, default=None)
    dual_space: FeSpace = dc_field(repr=False, default=None)
    forms: dict = dc_field(repr=False, default=None)
    perturbation: Perturbation = dc_field(repr=False, default=None)


def solve_poisson(space0: FeSpace, f, rel_tol: float = 1e-10) -> np.ndarray:
    """Galerkin solution of -Lap u = f with zero boundary values.

    The stiffness matrix on the zero-trace space is symmetric positive
    definite, so the solve cannot legitimately fail; solver errors
    propagate with context if it does.
    """
    if not space0.dirichlet:
        raise ValueError("solve_poisson requires a Dirichlet space")
    A0 = assemble_stiffness(space0).matrix
    b = assemble_load_region(space0, f, ALL_REGIONS)
    return solve_direct(A0, b, rel_tol)


def make_perturbation(
    geometry: Geometry,
    mode: str,
    epsilon: float,
    kappa: float,
    seed: int,
    space: FeSpace,
) -> Perturbation:
    """Construct a data perturbation scaled to L2(omega) norm epsilon.

    oscillatory: eps * sin(kappa x) sin(kappa y) / (quadrature norm on the
    polygonal omega).  nodal_noise: seeded uniform(-1,1) values on the
    dofs of the data-region elements, mass-scaled to eps.  The norm is
    recomputed after scaling and stored.
    """
    from .fem import region_l2_norm

    spec = PerturbationSpec(mode=mode, epsilon=epsilon, kappa=kappa, seed=seed)
    if spec.mode == "none" or spec.epsilon == 0.0:
        return Perturbation(mode="none", epsilon=0.0, field=ZeroField(), norm_l2_omega=0.0)

    if spec.mode == "oscillatory":
        raw = OscillatoryField(kappa=spec.kappa)
        raw_norm = region_l2_norm(space, raw, Region.OMEGA_DATA)
        if raw_norm == 0.0:
            raise ValueError(f"oscillatory perturbation with kappa={kappa} has zero norm")
        fld = ScaledField(raw, spec.epsilon / raw_norm)
        certified = region_l2_norm(space, fld, Region.OMEGA_DATA)
        return Perturbation(
            mode=spec.mode,
            epsilon=spec.epsilon,
            field=fld,
            norm_l2_omega=certified,
            kappa=spec.kappa,
            seed=spec.seed,
        )

    # nodal_noise
    elements = space.mesh.region_elements(Region.OMEGA_DATA)
    omega_dofs = np.unique(space.dof_map[elements])
    omega_dofs = omega_dofs[omega_dofs >= 0]
    rng = np.random.default_rng(spec.seed)
    coeffs = np.zeros(space.n_dofs)
    coeffs[omega_dofs] = rng.uniform(-1.0, 1.0, omega_dofs.size)
    M_omega = assemble_region_mass(space, Region.OMEGA_DATA).matrix
    raw_norm = np.sqrt(coeffs @ (M_omega @ coeffs))
    if raw_norm == 0.0:
        raise ValueError("nodal noise degenerated to the zero field")
    coeffs *= spec.epsilon / raw_norm
    fld = FeField(space, coeffs)
    certified = float(np.sqrt(coeffs @ (M_omega @ coeffs)))
    return Perturbation(
        mode=spec.mode,
        epsilon=spec.epsilon,
        field=fld,
        norm_l2_omega=certified,
        kappa=spec.kappa,
        seed=spec.seed,
    )


def solve_uc(problem: UcProblem, mesh: Mesh, rel_tol: float = 1e-10) -> UcSolution:
    """Assemble and solve the stabilized primal-dual system on a mesh."""
    space = build_space(mesh, problem.k, dirichlet=False)
    space0 = build_space(mesh, problem.k, dirichlet=True)

    h = mesh.h
    tik = h if problem.tikhonov_hmin is None else max(h, problem.tikhonov_hmin)
    S = assemble_stabilization(space, tik)
    M_omega = assemble_region_mass(space, Region.OMEGA_DATA)
    A0 = assemble_stiffness(space0)
    B = assemble_stiffness(space0, space)

    pert = make_perturbation(
        problem.geometry,
        problem.perturbation.mode,
        problem.perturbation.epsilon,
        problem.perturbation.kappa,
        problem.perturbation.seed,
        space,
    )
    load = assemble_load_region(space, problem.exact, Region.OMEGA_DATA)
    if pert.epsilon > 0.0:
        load = load + assemble_load_region(space, pert.field, Region.OMEGA_DATA)

    K = compose_saddle(S.matrix + M_omega.matrix, B.matrix, A0.matrix)
    rhs = np.concatenate([load, np.zeros(space0.n_dofs)])
    x = solve_direct(K, rhs, rel_tol)
    u = x[: space.n_dofs]
    z = x[space.n_dofs :]

    diag = SolveDiagnostics(
        solve_residual=achieved_residual(K, x, rhs),
        triple_norm_parts={
            "s": float(u @ (S.matrix @ u)),
            "dual": float(z @ (A0.matrix @ z)),
            "omega": float(u @ (M_omega.matrix @ u)),
        },
        h=h,
        tikhonov_scale=tik,
        n_dofs_primal=space.n_dofs,
        n_dofs_dual=space0.n_dofs,
    )
    return UcSolution(
        u=u,
        z=z,
        diagnostics=diag,
        primal_space=space,
        dual_space=space0,
        forms={"S": S, "M_omega": M_omega, "A0": A0, "B": B},
        perturbation=pert,
    )


def hminus1_residual(
    space0: FeSpace,
    space: FeSpace,
    u,
    A0: FormMatrix = None,
    B: FormMatrix = None,
) -> float:
    """Discrete dual norm of the equation residual of u.

    Riesz-represents v -> a(u, v) on the zero-trace space and returns the
    energy norm of the representer; a computable surrogate for the H^-1
    norm of Lap u that scales identically in h.
    """
    u = np.asarray(u, dtype=float)
    if A0 is None:
        A0 = assemble_stiffness(space0)
    if B is None:
        B = assemble_stiffness(space0, space)
    r = B.matrix @ u
    phi = solve_direct(A0.matrix.tocsr(), r)
    return float(np.sqrt(max(phi @ r, 0.0)))


def verify_positivity(space: FeSpace, space0: FeSpace, trials: int, seed: int = 0) -> float:
    """Max relative gap between the saddle form at (u,z),(u,-z) and the
    squared stability norm over seeded random coefficient pairs."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    S = assemble_stabilization(space, space.mesh.h)
    M_omega = assemble_region_mass(space, Region.OMEGA_DATA)
    A0 = assemble_stiffness(space0)
    B = assemble_stiffness(space0, space)
    K = compose_saddle(S.matrix + M_omega.matrix, B.matrix, A0.matrix)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.uniform(-1.0, 1.0, space.n_dofs)
        z = rng.uniform(-1.0, 1.0, space0.n_dofs)
        test = np.concatenate([u, -z])
        lhs = float(test @ (K @ np.concatenate([u, z])))
        rhs = float(u @ (S.matrix @ u) + z @ (A0.matrix @ z) + u @ (M_omega.matrix @ u))
        denom = max(abs(rhs), 1e-300)
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst
