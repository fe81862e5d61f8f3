"""Discretized 1+1D (optionally d+1D) massive scalar field on a periodic box.

Conventions (kept consistent everywhere, and pinned by executable tests):

* momenta p_k = 2 pi k / L per axis in FFT ordering, omega = sqrt(|p|^2 + m^2);
* hyperboloid restriction of a spacetime function uses the kernel
  ``exp(+i omega t - i p x)`` with plain Riemann weights ``a^d tau``;
* the mode-space inner product carries the weight 1 / (2 L^d omega); "metric
  coordinates" absorb its square root so frames are Euclidean-orthonormal;
* the time grid is centered, t_n = (n - (M-1)/2) tau, so t -> -t is a grid
  symmetry and time-symmetric/antisymmetric parts are exact on samples;
* the discrete Klein-Gordon operator is the exact-propagator three-point
  stencil in time (per spatial mode), normalized per mode so that the
  solution map and the source construction invert each other exactly on the
  grid.  All propagator identities then hold to machine precision; the only
  quadrature-limited statements are those involving continuum integrals.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .quasifree import GroundStructure, ThermalDoubling, build_thermal
from .subspaces import (
    TOL_ANGLE,
    TOL_EQ,
    TOL_RANK,
    RealLinearOperator,
    RealSubspace,
    apply_operator,
    intersect,
    max_principal_angle,
    orthocomplement,
    orthonormalize,
    sum_closure,
)
from . import duality

BOUNDARY_REL_TOL = 1e-14
RESONANCE_FLOOR = 1e-9


class ModelError(ValueError):
    """Invalid lattice parameters, supports, or mismatched structures."""


@dataclass(frozen=True)
class FieldModel:
    """Periodic spatial box with a centered time grid for test-function ingestion.

    Parameters
    ----------
    n_points : points per spatial axis (N)
    length : box circumference L (so the spacing is a = L / N)
    mass : field mass m > 0
    n_times : time samples M
    t_extent : total time extent T (spacing tau = T / M)
    spatial_dim : number of spatial axes d (acceptance work runs at d = 1)
    """

    n_points: int
    length: float
    mass: float
    n_times: int
    t_extent: float
    spatial_dim: int = 1

    def __post_init__(self):
        if self.n_points < 2:
            raise ModelError("need at least two points per axis")
        if not (self.length > 0 and self.mass > 0 and self.t_extent > 0):
            raise ModelError("length, mass and t_extent must be positive")
        if self.n_times < 5:
            raise ModelError("need at least five time samples for interior supports")
        if self.spatial_dim < 1:
            raise ModelError("spatial_dim must be >= 1")
        if np.min(np.abs(np.sin(self.omega * self.tau))) < RESONANCE_FLOOR:
            raise ModelError("resonant time step: omega * tau too close to a "
                             "multiple of pi; change n_times or t_extent")

    # -- grids ---------------------------------------------------------------

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def tau(self) -> float:
        return self.t_extent / self.n_times

    @property
    def size(self) -> int:
        return self.n_points ** self.spatial_dim

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.n_points,) * self.spatial_dim

    @cached_property
    def times(self) -> np.ndarray:
        n = np.arange(self.n_times)
        t = (n - (self.n_times - 1) / 2.0) * self.tau
        t.setflags(write=False)
        return t

    @cached_property
    def axis_coords(self) -> np.ndarray:
        x = np.arange(self.n_points) * self.spacing
        x.setflags(write=False)
        return x

    @cached_property
    def positions(self) -> np.ndarray:
        """Flattened spatial coordinates, shape (size, d)."""
        grids = np.meshgrid(*([self.axis_coords] * self.spatial_dim), indexing="ij")
        pos = np.stack([g.ravel() for g in grids], axis=-1)
        pos.setflags(write=False)
        return pos

    @cached_property
    def momenta(self) -> np.ndarray:
        """Flattened momentum vectors in FFT order, shape (size, d)."""
        per_axis = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)
        # fftfreq(N, d=a) returns cycles per unit length; convert to angular
        grids = np.meshgrid(*([per_axis] * self.spatial_dim), indexing="ij")
        p = np.stack([g.ravel() for g in grids], axis=-1)
        p.setflags(write=False)
        return p

    @cached_property
    def omega(self) -> np.ndarray:
        w = np.sqrt(np.sum(self.momenta ** 2, axis=-1) + self.mass ** 2)
        w.setflags(write=False)
        return w

    @cached_property
    def reflection(self) -> np.ndarray:
        """Flattened index permutation implementing k -> -k (mod N per axis)."""
        idx = np.arange(self.n_points)
        neg = (-idx) % self.n_points
        grids = np.meshgrid(*([idx] * self.spatial_dim), indexing="ij")
        coords = [neg[g] for g in grids]
        perm = np.ravel_multi_index([c.ravel() for c in coords], self.grid_shape)
        perm.setflags(write=False)
        return perm

    @cached_property
    def mode_weight(self) -> np.ndarray:
        """Quadrature weight of the hyperboloid measure: 1 / (2 L^d omega)."""
        w = 1.0 / (2.0 * self.length ** self.spatial_dim * self.omega)
        w.setflags(write=False)
        return w

    @cached_property
    def sqrt_weight(self) -> np.ndarray:
        w = np.sqrt(self.mode_weight)
        w.setflags(write=False)
        return w

    # -- Fourier helpers -------------------------------------------------------

    def spatial_fft(self, f: np.ndarray) -> np.ndarray:
        """Riemann-sum spatial Fourier transform, a^d sum f e^{-ipx}."""
        f = np.asarray(f).reshape(self.grid_shape)
        return (self.spacing ** self.spatial_dim) * np.fft.fftn(f).ravel()

    def spatial_ifft(self, psi: np.ndarray) -> np.ndarray:
        """Inverse transform (1 / L^d) sum psi e^{+ipx}."""
        psi = np.asarray(psi, dtype=complex).reshape(self.grid_shape)
        return np.fft.ifftn(psi).ravel() / (self.spacing ** self.spatial_dim)

    # -- one-particle space ----------------------------------------------------

    def h_inner(self, psi: np.ndarray, phi: np.ndarray) -> complex:
        """Hyperboloid inner product, antilinear in the first slot."""
        return complex(np.sum(self.mode_weight * np.conj(psi) * phi))

    def h_norm_sq(self, psi: np.ndarray) -> float:
        return float(np.sum(self.mode_weight * np.abs(psi) ** 2))

    def to_metric(self, psi: np.ndarray) -> np.ndarray:
        return self.sqrt_weight * np.asarray(psi, dtype=complex)

    def from_metric(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=complex) / self.sqrt_weight

    def ground_structure(self) -> GroundStructure:
        return GroundStructure(self.omega)

    def thermal(self, beta: float) -> ThermalDoubling:
        return build_thermal(self.ground_structure(), beta)

    @cached_property
    def realified(self):
        from .subspaces import RealifiedSpace
        return RealifiedSpace(self.size)

    @cached_property
    def factor_subspace(self) -> RealSubspace:
        """The factor K: metric-coordinate vectors with conj(u_k) = u_{-k}.

        Orthonormal orbit basis: one real vector per self-paired mode, a
        symmetric/antisymmetric pair otherwise.  Images of real test functions
        land here (time-symmetric ones), which is what makes e^{-beta h} and
        the conjugation leave K invariant.
        """
        cols = []
        rho = self.reflection
        n = self.size
        for k in range(n):
            if rho[k] == k:
                v = np.zeros(n, dtype=complex)
                v[k] = 1.0
                cols.append(self.realified.realify(v))
            elif k < rho[k]:
                v = np.zeros(n, dtype=complex)
                v[k] = 1.0 / np.sqrt(2.0)
                v[rho[k]] = 1.0 / np.sqrt(2.0)
                cols.append(self.realified.realify(v))
                w = np.zeros(n, dtype=complex)
                w[k] = 1j / np.sqrt(2.0)
                w[rho[k]] = -1j / np.sqrt(2.0)
                cols.append(self.realified.realify(w))
        return RealSubspace(np.column_stack(cols))

    def duality_context(self, thermal: ThermalDoubling) -> duality.DualityContext:
        if not np.allclose(thermal.ground.dispersion, self.omega):
            raise ModelError("thermal structure was not built on this model's dispersion")
        return duality.DualityContext(thermal, self.factor_subspace)

    # -- hyperboloid embedding --------------------------------------------------

    def k_infty(self, f: "TestFunction") -> np.ndarray:
        """Restriction of the spacetime transform to the mass hyperboloid.

        psi_k = a^d tau sum_{n,j} f(t_n, x_j) e^{+i omega_k t_n} e^{-i p_k x_j}
        """
        rows = np.stack([self.spatial_fft(f.samples[n]) for n in range(self.n_times)])
        phases = np.exp(1j * np.outer(self.times, self.omega))
        return self.tau * np.sum(rows * phases, axis=0)

    def k_infty_metric(self, f: "TestFunction") -> np.ndarray:
        return self.to_metric(self.k_infty(f))

    # -- initial-data spaces ------------------------------------------------------

    def delta0(self, psi: np.ndarray) -> np.ndarray:
        """Spatial field datum of a hyperboloid function (time-symmetric sector)."""
        return self.spatial_ifft(psi).real

    def delta1(self, psi: np.ndarray) -> np.ndarray:
        """Spatial momentum datum, (i omega)^{-1} weighting (antisymmetric sector)."""
        return self.spatial_ifft(psi / (1j * self.omega)).real

    def delta0_inv(self, f: np.ndarray) -> np.ndarray:
        return self.spatial_fft(f)

    def delta1_inv(self, g: np.ndarray) -> np.ndarray:
        return 1j * self.omega * self.spatial_fft(g)

    def phi_inner(self, f: np.ndarray, g: np.ndarray) -> float:
        fh, gh = self.spatial_fft(f), self.spatial_fft(g)
        return float(np.sum(self.mode_weight * np.conj(fh) * gh).real)

    def pi_inner(self, f: np.ndarray, g: np.ndarray) -> float:
        fh, gh = self.spatial_fft(f), self.spatial_fft(g)
        w = self.omega / (2.0 * self.length ** self.spatial_dim)
        return float(np.sum(w * np.conj(fh) * gh).real)

    def l2_inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(self.spacing ** self.spatial_dim * np.sum(np.asarray(f) * np.asarray(g)))

    def beta_pi_phi(self, g: np.ndarray) -> np.ndarray:
        """The composite delta0 . J . delta1^{-1}: multiplication by -omega."""
        return self.spatial_ifft(-self.omega * self.spatial_fft(g)).real


@dataclass(frozen=True)
class TestFunction:
    """Real samples on the spacetime grid, with a declared support mask."""

    __test__ = False  # smeared-field terminology, not a pytest class

    samples: np.ndarray
    support: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2:
            raise ModelError("samples must be (n_times, size)")
        object.__setattr__(self, "samples", s)
        s.setflags(write=False)
        if self.support is None:
            object.__setattr__(self, "support", s != 0.0)
        else:
            mask = np.asarray(self.support, dtype=bool)
            if mask.shape != s.shape:
                raise ModelError("support mask shape mismatch")
            if np.any(s[~mask] != 0.0):
                raise ModelError("samples do not vanish outside the declared support")
            object.__setattr__(self, "support", mask)
        self.support.setflags(write=False)

    def time_symmetric(self) -> "TestFunction":
        """f_+ with f_±(t, x) = (f(t, x) ± f(-t, x)) / 2; exact on the centered grid."""
        return TestFunction(0.5 * (self.samples + self.samples[::-1]))

    def time_antisymmetric(self) -> "TestFunction":
        return TestFunction(0.5 * (self.samples - self.samples[::-1]))

    def shifted(self, steps: int) -> "TestFunction":
        """Time translation by an integer number of grid steps, t -> t + steps*tau."""
        m = self.samples.shape[0]
        out = np.zeros_like(self.samples)
        src = np.arange(m) + steps
        ok = (src >= 0) & (src < m)
        out[ok] = self.samples[src[ok]]
        if not np.isclose(np.sum(np.abs(out)), np.sum(np.abs(self.samples))):
            raise ModelError("time shift pushes support off the grid")
        return TestFunction(out)


def smooth_step(t0: float, t1: float):
    """C^inf monotone 0 -> 1 cutoff over [t0, t1] (the classic exp-ratio glue)."""
    if not t1 > t0:
        raise ModelError("empty cutoff window")

    def ramp(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    def chi(t):
        t = np.asarray(t, dtype=float)
        s = (t - t0) / (t1 - t0)
        num = ramp(s)
        return num / (num + ramp(1.0 - s))

    return chi


def bump_test_function(model: FieldModel, family: str = "compact", *,
                       t_center: float = 0.0, t_width: float = 1.0,
                       x_center=None, x_width: float = 1.0,
                       order: float = 1.0, amplitude: float = 1.0) -> TestFunction:
    """Separable bump from a named family ("compact" or "gaussian").

    The compact family is exp(order * (1 - 1/(1 - s^2))) inside |s| < 1 and
    exactly zero outside; the gaussian family decays below machine precision a
    few widths out.  Spatial distance is periodic.
    """
    if x_center is None:
        x_center = np.full(model.spatial_dim, model.length / 2.0)
    x_center = np.atleast_1d(np.asarray(x_center, dtype=float))

    def profile(s):
        s = np.asarray(s, dtype=float)
        if family == "gaussian":
            return np.exp(-0.5 * s ** 2 * order)
        if family == "compact":
            out = np.zeros_like(s)
            inside = np.abs(s) < 1.0
            out[inside] = np.exp(order * (1.0 - 1.0 / (1.0 - s[inside] ** 2)))
            return out
        raise ModelError(f"unknown bump family: {family!r}")

    st = (model.times - t_center) / t_width
    diff = model.positions - x_center[None, :]
    diff = (diff + model.length / 2.0) % model.length - model.length / 2.0
    sx = np.sqrt(np.sum(diff ** 2, axis=-1)) / x_width
    samples = amplitude * np.outer(profile(st), profile(sx))
    return TestFunction(samples)


def test_function_from_csv(model: FieldModel, path) -> TestFunction:
    """Load samples from CSV columns (t, x, value); d = 1 only.

    Coordinates must sit on grid points (fine tolerance); silently snapping
    misplaced rows would corrupt support bookkeeping, so they are rejected.
    """
    if model.spatial_dim != 1:
        raise ModelError("CSV ingestion is defined for one spatial axis")
    raw = np.loadtxt(Path(path), delimiter=",", comments="#", skiprows=0, ndmin=2,
                     dtype=str)
    start = 0
    try:
        float(raw[0, 0])
    except ValueError:
        start = 1
    data = raw[start:].astype(float)
    if data.shape[1] != 3:
        raise ModelError("expected exactly three CSV columns: t, x, value")
    samples = np.zeros((model.n_times, model.size))
    for t, x, value in data:
        n = int(round((t - model.times[0]) / model.tau))
        if not (0 <= n < model.n_times) or abs(model.times[n] - t) > 1e-6 * model.tau:
            raise ModelError(f"time {t} is not on the grid")
        j = int(round((x % model.length) / model.spacing)) % model.n_points
        gap = abs(model.axis_coords[j] - x % model.length)
        if min(gap, model.length - gap) > 1e-6 * model.spacing:
            raise ModelError(f"position {x} is not on the grid")
        samples[n, j] = value
    return TestFunction(samples)


test_function_from_csv.__test__ = False


@dataclass(frozen=True)
class Region:
    """A base set on the spatial grid; its Cauchy development is the diamond."""

    base_mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.base_mask, dtype=bool).ravel()
        object.__setattr__(self, "base_mask", mask)
        mask.setflags(write=False)

    @property
    def complement_mask(self) -> np.ndarray:
        return ~self.base_mask

    @property
    def n_sites(self) -> int:
        return int(np.sum(self.base_mask))

    def complement(self) -> "Region":
        return Region(~self.base_mask)

    def diamond_mask(self, model: FieldModel) -> np.ndarray:
        """Spacetime mask of the causal diamond over the base (periodic metric)."""
        out = np.zeros((model.n_times, model.size), dtype=bool)
        comp = model.positions[self.complement_mask]
        if comp.size == 0:
            return np.ones_like(out)
        for j in range(model.size):
            diff = comp - model.positions[j][None, :]
            diff = (diff + model.length / 2) % model.length - model.length / 2
            dist = np.min(np.sqrt(np.sum(diff ** 2, axis=-1)))
            out[:, j] = np.abs(model.times) < dist
        return out


def interval_region(model: FieldModel, center, halfwidth: float) -> Region:
    """Base region of all grid sites within periodic distance halfwidth of center."""
    if not 0 < halfwidth <= model.length / 2:
        raise ModelError("halfwidth must lie in (0, L/2]")
    center = np.atleast_1d(np.asarray(center, dtype=float))
    diff = model.positions - center[None, :]
    diff = (diff + model.length / 2) % model.length - model.length / 2
    mask = np.all(np.abs(diff) <= halfwidth + 1e-12 * model.spacing, axis=-1)
    if not mask.any():
        raise ModelError("region contains no grid sites")
    return Region(mask)


# -- causal propagator ----------------------------------------------------------


def _check_interior_time_support(model: FieldModel, f: TestFunction):
    peak = np.max(np.abs(f.samples))
    if peak == 0.0:
        return
    for row in (0, model.n_times - 1):
        if np.max(np.abs(f.samples[row])) > BOUNDARY_REL_TOL * peak:
            raise ModelError("support touches the time-grid boundary; "
                             "wrap-around would corrupt causality")


def causal_propagator(model: FieldModel, h: TestFunction) -> np.ndarray:
    """Solution field E h sampled on the grid, from the hyperboloid data of h.

    (E h)(t, x) = (1 / L^d) sum_k Im[ h_k e^{-i omega t + i p x} ] / omega_k,
    the sign being pinned by the two initial-data identities
    (E h)(0, .) = delta1 h_- and -d_t (E h)(0, .) = delta0 h_+.
    """
    _check_interior_time_support(model, h)
    psi = model.k_infty(h)
    out = np.empty((model.n_times, model.size))
    for n, t in enumerate(model.times):
        modes = psi / model.omega * np.exp(-1j * model.omega * t)
        out[n] = model.spatial_ifft(modes).imag
    return out


def propagator_slice(model: FieldModel, psi: np.ndarray, t: float,
                     derivative: int = 0) -> np.ndarray:
    """Closed-form time slice of E h (or its exact time derivative) at any t."""
    modes = psi / model.omega * np.exp(-1j * model.omega * t)
    if derivative == 0:
        return model.spatial_ifft(modes).imag
    if derivative == 1:
        return model.spatial_ifft(-1j * model.omega * modes).imag
    raise ModelError("only derivative orders 0 and 1 are provided")


def klein_gordon(model: FieldModel, field_samples: np.ndarray) -> np.ndarray:
    """Discrete Klein-Gordon operator: exact-propagator stencil per spatial mode.

    In mode space, (P F)^(k, n) = -omega_k / (tau sin(omega_k tau)) *
    [ F^(k, n+1) - 2 cos(omega_k tau) F^(k, n) + F^(k, n-1) ]  (zero padding).
    Any superposition of e^{+-i omega_k t} sampled on the grid is annihilated
    identically, and the normalization makes the source construction exact.
    """
    f = np.asarray(field_samples, dtype=float)
    rows = np.stack([model.spatial_fft(f[n]) for n in range(f.shape[0])])
    padded = np.vstack([np.zeros((1, model.size), dtype=complex), rows,
                        np.zeros((1, model.size), dtype=complex)])
    cos = np.cos(model.omega * model.tau)
    scale = -model.omega / (model.tau * np.sin(model.omega * model.tau))
    stencil = padded[2:] - 2.0 * cos[None, :] * padded[1:-1] + padded[:-2]
    out_hat = scale[None, :] * stencil
    return np.stack([model.spatial_ifft(out_hat[n]).real for n in range(f.shape[0])])


def mode_solution(model: FieldModel, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Spatial modes of the solution with data (phi, d_t phi) = (f, g) at t = 0."""
    fh = model.spatial_fft(f)
    gh = model.spatial_fft(g)
    t = model.times[:, None]
    w = model.omega[None, :]
    return np.cos(w * t) * fh[None, :] + np.sin(w * t) / w * gh[None, :]


def source_from_initial_data(model: FieldModel, f: np.ndarray, g: np.ndarray,
                             chi) -> TestFunction:
    """Compactly supported source h with E h reproducing the (f, g) solution.

    h = P(chi(t) phi) with phi the solution; computed through the discrete
    Leibniz form of the stencil so the support is confined to the cutoff
    window (plus one step).  The result is independent of the choice of chi.
    """
    chi_vals = np.asarray(chi(model.times), dtype=float)
    if abs(chi_vals[0]) > 1e-13 or abs(chi_vals[-1] - 1.0) > 1e-13:
        raise ModelError("cutoff must be 0 at the first and 1 at the last grid time")
    moving = np.where(np.abs(np.diff(chi_vals)) > 1e-15)[0]
    if moving.size and (moving[0] < 2 or moving[-1] > model.n_times - 4):
        raise ModelError("cutoff window too close to the time-grid boundary")

    phi_hat = mode_solution(model, f, g)
    chi_ext = np.concatenate([[chi_vals[0]], chi_vals, [chi_vals[-1]]])
    phi_ext = np.vstack([phi_hat[:1], phi_hat, phi_hat[-1:]])  # rows 0, M-1 never used
    scale = -model.omega / (model.tau * np.sin(model.omega * model.tau))
    h_hat = np.zeros_like(phi_hat)
    for n in range(model.n_times):
        d_fwd = chi_ext[n + 2] - chi_ext[n + 1]
        d_bwd = chi_ext[n] - chi_ext[n + 1]
        h_hat[n] = scale * (d_fwd * phi_ext[n + 2] + d_bwd * phi_ext[n])
    samples = np.stack([model.spatial_ifft(h_hat[n]).real for n in range(model.n_times)])
    samples[np.abs(samples) < 1e-300] = 0.0
    return TestFunction(samples)


# -- localized subspaces -----------------------------------------------------------


def build_FR(model: FieldModel, mask: np.ndarray) -> RealSubspace:
    """F_R of a base set: field data supported on the set, in metric coordinates."""
    mask = np.asarray(mask, dtype=bool).ravel()
    if not mask.any():
        raise ModelError("empty base set")
    cols = []
    for j in np.flatnonzero(mask):
        e = np.zeros(model.size)
        e[j] = 1.0
        cols.append(model.realified.realify(model.to_metric(model.delta0_inv(e))))
    return orthonormalize(np.column_stack(cols), TOL_RANK)


def build_FI(model: FieldModel, mask: np.ndarray) -> RealSubspace:
    """F_I of a base set: (-omega)-multiplied momentum data supported on the set."""
    mask = np.asarray(mask, dtype=bool).ravel()
    if not mask.any():
        raise ModelError("empty base set")
    cols = []
    for j in np.flatnonzero(mask):
        e = np.zeros(model.size)
        e[j] = 1.0
        cols.append(model.realified.realify(
            model.to_metric(-model.omega * model.delta0_inv(e))))
    return orthonormalize(np.column_stack(cols), TOL_RANK)


def araki_duality_check(model: FieldModel, mask: np.ndarray,
                        tol: float = TOL_EQ) -> dict:
    """Both localized orthogonality identities inside the field-data space.

    The orthogonal of F_R over the base equals F_I over the complement and
    vice versa; on the grid the dimensions add up exactly, so equality is a
    principal-angle check.
    """
    mask = np.asarray(mask, dtype=bool).ravel()
    comp = ~mask
    factor = model.factor_subspace
    fr = build_FR(model, mask)
    out = {"dim_FR": fr.rank, "n_sites": int(mask.sum()), "size": model.size}
    fr_perp = orthocomplement(fr, within=factor)
    if comp.any():
        fi_comp = build_FI(model, comp)
        angle_r = max_principal_angle(fr_perp, fi_comp)
        dims_r = fr_perp.rank == fi_comp.rank
    else:
        angle_r, dims_r = 0.0, fr_perp.rank == 0
    fi = build_FI(model, mask)
    fi_perp = orthocomplement(fi, within=factor)
    if comp.any():
        fr_comp = build_FR(model, comp)
        angle_i = max_principal_angle(fi_perp, fr_comp)
        dims_i = fi_perp.rank == fr_comp.rank
    else:
        angle_i, dims_i = 0.0, fi_perp.rank == 0
    out.update({
        "max_angle_R": float(angle_r),
        "max_angle_I": float(angle_i),
        "dims_match": bool(dims_r and dims_i),
        "tolerance": tol,
        "passed": bool(dims_r and dims_i and max(angle_r, angle_i) < tol),
    })
    return out


def build_local_thermal_subspaces(model: FieldModel, thermal: ThermalDoubling,
                                  region: Region,
                                  ctx: duality.DualityContext | None = None):
    """The doubled localized subspaces (U_O, V_O) of a causal diamond."""
    if ctx is None:
        ctx = model.duality_context(thermal)
    k1 = build_FR(model, region.base_mask)
    k2 = build_FI(model, region.base_mask)
    return duality.build_U(ctx, k1), duality.build_V(ctx, k2)


def haag_duality_check(model: FieldModel, thermal: ThermalDoubling, region: Region,
                       tol: float = TOL_EQ) -> dict:
    """Localized orthocomplement identities plus the assembled duality statement.

    Inside K (+) K:  U_O^perp = V_O' (+) V~  and  V_O^perp = U_O' (+) U~.
    Assembled: the symplectic complement of U_O (+) J V_O equals the closure of
    (U_O' (+) J V_O') + j H^beta, with j the modular conjugation generator.
    """
    ctx = model.duality_context(thermal)
    comp = region.complement()
    k1 = build_FR(model, region.base_mask)
    k2 = build_FI(model, region.base_mask)
    u_o = duality.build_U(ctx, k1)
    v_o = duality.build_V(ctx, k2)

    kk = ctx.kk()
    u_perp = orthocomplement(u_o, within=kk)
    v_perp = orthocomplement(v_o, within=kk)
    if comp.n_sites:
        v_oc = duality.build_V(ctx, build_FI(model, comp.base_mask))
        u_oc = duality.build_U(ctx, build_FR(model, comp.base_mask))
    else:
        v_oc = RealSubspace.zero(u_o.ambient_real_dim)
        u_oc = RealSubspace.zero(u_o.ambient_real_dim)
    rhs_u = sum_closure(v_oc, duality.build_Vtilde(ctx))
    rhs_v = sum_closure(u_oc, duality.build_Utilde(ctx))
    angle_u = max_principal_angle(u_perp, rhs_u)
    angle_v = max_principal_angle(v_perp, rhs_v)

    jmat = RealLinearOperator(ctx.doubled.complex_structure)
    local = sum_closure(u_o, apply_operator(jmat, v_o))
    sympl = duality.symplectic_complement(ctx, local)
    j_pred, _ = duality.predicted_modular_blocks(ctx)
    reflected_global = apply_operator(RealLinearOperator(j_pred),
                                      duality.global_thermal_subspace(ctx))
    if comp.n_sites:
        local_comp = sum_closure(u_oc, apply_operator(jmat, v_oc))
    else:
        local_comp = RealSubspace.zero(u_o.ambient_real_dim)
    rhs_total = sum_closure(local_comp, reflected_global)
    angle_total = max_principal_angle(sympl, rhs_total)
    sigma_resid = duality.symplectic_orthogonality_residual(ctx, local, rhs_total)

    dims_ok = (u_perp.rank == rhs_u.rank and v_perp.rank == rhs_v.rank
               and sympl.rank == rhs_total.rank)
    worst = max(angle_u, angle_v, angle_total)
    return {
        "n_sites": region.n_sites,
        "dim_U_O": u_o.rank,
        "dim_V_O": v_o.rank,
        "angle_U_identity": float(angle_u),
        "angle_V_identity": float(angle_v),
        "angle_assembled_duality": float(angle_total),
        "sigma_orthogonality_residual": float(sigma_resid),
        "dim_symplectic_complement": sympl.rank,
        "dims_match": bool(dims_ok),
        "tolerance": tol,
        "passed": bool(dims_ok and worst < tol and sigma_resid < tol),
    }


def standardness_report(model: FieldModel, thermal: ThermalDoubling,
                        region: Region | None = None, tol: float = TOL_EQ) -> dict:
    """Finite-truncation separating/cyclic diagnostics of a thermal subspace.

    The separating part dim(H ^ JH) vanishes for every region.  The complex
    span is full only for the global subspace; hard truncation removes the
    cyclicity of local ones, so the exact deficit 4(size - n_sites) is
    reported as a documented limitation rather than a failure.
    """
    ctx = model.duality_context(thermal)
    jmat = RealLinearOperator(ctx.doubled.complex_structure)
    if region is None:
        h = duality.global_thermal_subspace(ctx)
        n_sites = model.size
    else:
        u_o, v_o = build_local_thermal_subspaces(model, thermal, region, ctx)
        h = sum_closure(u_o, apply_operator(jmat, v_o))
        n_sites = region.n_sites
    ambient = ctx.doubled.real_dim
    separating = intersect(h, apply_operator(jmat, h), TOL_ANGLE).rank
    span = sum_closure(h, apply_operator(jmat, h)).rank
    deficit = ambient - span
    expected_deficit = ambient - 4 * n_sites
    return {
        "scope": "global" if region is None else "local",
        "dim_H": h.rank,
        "separating_intersection_dim": separating,
        "complex_span_rank": span,
        "ambient_dim": ambient,
        "cyclicity_deficit": deficit,
        "expected_deficit": expected_deficit,
        "truncation_limited": bool(deficit > 0),
        "tolerance": tol,
        "passed": bool(separating == 0 and deficit == expected_deficit),
    }


def sigma_consistency_report(model: FieldModel, f: TestFunction, g: TestFunction,
                             tol: float = 1e-6) -> dict:
    """Propagator pairing a^d tau sum f (E g) against 2 Im <K f, K g>."""
    lhs = 2.0 * model.h_inner(model.k_infty(f), model.k_infty(g)).imag
    eg = causal_propagator(model, g)
    rhs = model.spacing ** model.spatial_dim * model.tau * float(np.sum(f.samples * eg))
    denom = max(abs(lhs), abs(rhs), 1e-300)
    dev = abs(lhs - rhs) / denom
    return {"sigma_inner": lhs, "sigma_pairing": rhs, "relative_deviation": float(dev),
            "tolerance": tol, "passed": bool(dev < tol)}


def propagator_identities_report(model: FieldModel, h: TestFunction,
                                 tol: float = 1e-8, tol_mode: float = 1e-9) -> dict:
    """The two initial-data identities plus E P = P E = 0 in mode space."""
    psi = model.k_infty(h)
    scale = max(np.sqrt(model.h_norm_sq(psi)), 1e-300)
    eh = causal_propagator(model, h)
    # one common field scale: a vanishing identity side (e.g. exactly
    # time-symmetric h) must not blow up the relative residual
    field_scale = max(np.max(np.abs(eh)), 1e-300)

    lhs0 = propagator_slice(model, psi, 0.0)
    rhs0 = model.delta1(model.k_infty(h.time_antisymmetric()))
    id1 = np.max(np.abs(lhs0 - rhs0)) / field_scale

    lhs1 = -propagator_slice(model, psi, 0.0, derivative=1)
    rhs1 = model.delta0(model.k_infty(h.time_symmetric()))
    id2 = np.max(np.abs(lhs1 - rhs1)) / max(np.max(np.abs(rhs1)), field_scale)

    # E(P h) = 0: hyperboloid data of the stencil image vanish
    ph = TestFunction(klein_gordon(model, h.samples))
    e_of_p = np.max(np.abs(model.to_metric(model.k_infty(ph)))) / scale

    # P(E h) = 0 on interior rows
    peh = klein_gordon(model, eh)
    p_of_e = np.max(np.abs(peh[1:-1])) / field_scale

    return {
        "initial_field_identity": float(id1),
        "initial_momentum_identity": float(id2),
        "E_after_P_residual": float(e_of_p),
        "P_after_E_residual": float(p_of_e),
        "tolerance": tol,
        "passed": bool(id1 < tol and id2 < tol and e_of_p < tol_mode
                       and p_of_e < tol_mode),
    }


def source_roundtrip_report(model: FieldModel, f: np.ndarray, g: np.ndarray,
                            window: tuple[float, float] | None = None,
                            tol: float = 1e-8) -> dict:
    """Round-trip (f, g) -> source -> E -> initial data, plus cutoff independence."""
    if window is None:
        lo = model.times[2]
        hi = model.times[-3]
        window = (lo + 0.1 * (hi - lo), lo + 0.45 * (hi - lo))
    chi_a = smooth_step(*window)
    mid = 0.5 * (window[0] + window[1])
    chi_b = smooth_step(window[0], mid)
    h_a = source_from_initial_data(model, f, g, chi_a)
    h_b = source_from_initial_data(model, f, g, chi_b)

    psi = model.k_infty(h_a)
    f_rec = propagator_slice(model, psi, 0.0)
    g_rec = propagator_slice(model, psi, 0.0, derivative=1)
    scale_f = max(np.max(np.abs(f)), 1e-300)
    scale_g = max(np.max(np.abs(g)), np.max(np.abs(f)), 1e-300)
    res_f = np.max(np.abs(f_rec - f)) / scale_f
    res_g = np.max(np.abs(g_rec - g)) / scale_g

    ea = causal_propagator(model, h_a)
    eb = causal_propagator(model, h_b)
    chi_dev = np.max(np.abs(ea - eb)) / max(np.max(np.abs(ea)), 1e-300)
    return {
        "field_roundtrip_residual": float(res_f),
        "momentum_roundtrip_residual": float(res_g),
        "cutoff_independence": float(chi_dev),
        "tolerance": tol,
        "passed": bool(res_f < tol and res_g < tol and chi_dev < tol),
    }


def embedding_constants_report(model: FieldModel, tol: float = 1e-12) -> dict:
    """Grid continuity constants of the initial-data embeddings.

    On the grid both embedding norms are reached on single modes:
    ||j1|| = sqrt(2/m) into L^2 and ||j2|| = 1/sqrt(2 m) into the field-data
    space; both respect the common bound sqrt(2/m).
    """
    bound = np.sqrt(2.0 / model.mass)
    j1 = float(np.max(np.sqrt(2.0 / model.omega)))
    j2 = float(np.max(np.sqrt(1.0 / (2.0 * model.omega))))
    return {
        "j1_norm": j1,
        "j2_norm": j2,
        "bound": float(bound),
        "passed": bool(j1 <= bound + tol and j2 <= bound + tol),
    }
