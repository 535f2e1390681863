"""System-meter couplings, exact and truncated evolution, and pointer fits.

Sign and ordering conventions (fixed once, used everywhere):

* A delta kick generated by -g delta(.) A (x) q_hat is applied as the
  unitary exp(+i g A (x) q_hat), so a post-selected meter acquires the
  factor exp(+i g q A_w) and the momentum mean shifts by +g Re(A_w).
  ``kick_sign=-1`` flips the kick exponent (only) to reproduce the
  alternate bookkeeping in which the linear term reads -i g A q; fitted
  values then come out sign-flipped.
* ``kick_time`` places the instantaneous kick inside the static-noise
  window [0, t].  The default (kick_time = t) lets the noise act for the
  full window before the measurement kick; this is the ordering whose
  second-order cross term matches the retained g g' t term, and it is a
  physical choice, not bookkeeping: the fitted pointer response depends
  on it at first order in g' t.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AnnihilationError, IllConditionedFitError, SignatureError
from .hilbert import Ket, Operator, SpaceSignature, extend, tensor
from .meter import DiscreteGaussianMeter, MeterReadout, meter_readout, position_operator
from .optics import METER, ORBITAL, named_state
from .weakvalue import observable

__all__ = [
    "VARIANTS",
    "CouplingSpec",
    "EffectiveWeakValueFit",
    "build_hamiltonian",
    "evolve_exact",
    "evolve_dyson2",
    "post_select_meter",
    "fit_effective_weak_value",
    "disembodied_measurement",
    "parallel_arm_readout",
]

VARIANTS = (
    "noiseless_kick",
    "spin_orbit",
    "parallel_1",
    "parallel_2",
    "three_body",
    "measure_sigma_zR",
    "measure_sigma_zR_noisy",
    "measure_LxSx_L",
    "measure_LxSx_R",
)

_STATIC_NOISE = {"spin_orbit": "Lx_sigma_x", "parallel_1": "Lx_sigma_z", "parallel_2": "Lz_sigma_z"}
_TIME_EXTENDED = ("spin_orbit", "parallel_1", "parallel_2", "measure_LxSx_L", "measure_LxSx_R")

FIT_SUPPORT_ATOL = 1e-8


@dataclass(frozen=True)
class CouplingSpec:
    """Which coupling acts, how strongly, and where the kick sits in time.

    ``measure_arm`` applies to the parallel-noise variants only: 'R' reads
    the signal (sigma_z in the right arm) and 'L' reads the arm-resolved
    noise observable in the left arm; unset means the linear (no-path)
    arrangement.
    """

    variant: str
    g: float = 1e-3
    gprime: float = 1e-3
    t: float = 1.0
    kick_time: float | None = None
    measure_arm: str | None = None
    kick_sign: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown coupling variant {self.variant!r}; valid: {VARIANTS}")
        if self.g < 0 or self.gprime < 0:
            raise ValueError("coupling constants must be nonnegative")
        if self.variant in _TIME_EXTENDED and self.t <= 0:
            raise ValueError(f"variant {self.variant!r} needs a positive duration t")
        if self.kick_time is not None and not 0.0 <= self.kick_time <= self.t:
            raise ValueError(f"kick_time must lie in [0, t], got {self.kick_time}")
        if self.measure_arm is not None:
            if self.variant not in ("parallel_1", "parallel_2"):
                raise ValueError("measure_arm applies to the parallel variants only")
            if self.measure_arm not in ("L", "R"):
                raise ValueError(f"measure_arm must be 'L' or 'R', got {self.measure_arm!r}")
        if self.kick_sign not in (1, -1):
            raise ValueError(f"kick_sign must be +1 or -1, got {self.kick_sign}")

    @property
    def resolved_kick_time(self) -> float:
        return self.t if self.kick_time is None else self.kick_time

    @property
    def gprime_t(self) -> float:
        return self.gprime * self.t

    @property
    def fit_coupling(self) -> float:
        """Coupling in front of q in the kick: what the pointer fit divides by."""
        if self.variant in ("measure_LxSx_L", "measure_LxSx_R"):
            return self.gprime * self.t
        return self.g

    @property
    def in_regime(self) -> bool:
        """g/g' << t << sqrt(g)/g' with factor-of-10 margins on both sides."""
        if self.variant not in _STATIC_NOISE or self.gprime == 0.0:
            return True
        if self.g <= 0.0:
            return False
        return (10.0 * self.g / self.gprime <= self.t
                and 10.0 * self.t <= np.sqrt(self.g) / self.gprime)


@dataclass(frozen=True)
class EffectiveWeakValueFit:
    """Least-squares fit of a post-selected meter to exp(a) exp(i g q A).

    ``value`` estimates the effective weak value A, ``offset`` the
    non-shifting prefactor a (overlap included), ``residual`` the weighted
    rms misfit of the log-ratios.
    """

    value: complex
    offset: complex
    residual: float


def _meter_axis(sig: SpaceSignature) -> int:
    return sig.axis_of(METER)


def _orbital_dim(sig: SpaceSignature) -> int:
    try:
        return sig.dimension_of(ORBITAL)
    except SignatureError:
        return 2


def _meter_position(sig: SpaceSignature) -> Operator:
    half = (sig.dimension_of(METER) - 1) // 2
    return extend(position_operator(half, METER), sig)


def _zero(sig: SpaceSignature) -> Operator:
    return Operator(sig, np.zeros((sig.dim, sig.dim), dtype=complex))


def build_hamiltonian(spec: CouplingSpec, sig: SpaceSignature) -> tuple[Operator, Operator]:
    """(kick generator, static Hamiltonian) on the full system+meter signature.

    The kick generator carries its coupling strength and is exponentiated
    as exp(+i kick_sign * kick) at ``kick_time``; the static part is a
    per-unit-time Hamiltonian evolved as exp(-i static * duration).  For
    the three-body variant both couplings sit in the kick and static = 0.
    """
    d = _orbital_dim(sig)
    q_op = _meter_position(sig)

    def ext(obs_id: str) -> Operator:
        return extend(observable(obs_id, orbital_dim=d), sig)

    def arm_kick(q_obs: str, flat_obs: str, strength: float) -> Operator:
        return strength * (ext(q_obs) @ q_op + ext(flat_obs))

    v = spec.variant
    if v == "noiseless_kick":
        return spec.g * (ext("sigma_z") @ q_op), _zero(sig)
    if v == "spin_orbit":
        return spec.g * (ext("sigma_z") @ q_op), spec.gprime * ext("Lx_sigma_x")
    if v in ("parallel_1", "parallel_2"):
        noise = _STATIC_NOISE[v]
        static = spec.gprime * ext(noise)
        if spec.measure_arm is None:
            kick = spec.g * (ext("sigma_z") @ q_op)
        elif spec.measure_arm == "R":
            kick = arm_kick("sigma_z_R", "sigma_z_L", spec.g)
        else:
            kick = arm_kick(noise + "_L", noise + "_R", spec.g)
        return kick, static
    if v == "three_body":
        return spec.g * ((ext("sigma_z") - ext("Lx_sigma_x")) @ q_op), _zero(sig)
    if v in ("measure_sigma_zR", "measure_sigma_zR_noisy"):
        return arm_kick("sigma_z_R", "sigma_z_L", spec.g), _zero(sig)
    if v == "measure_LxSx_L":
        return arm_kick("Lx_sigma_x_L", "Lx_sigma_x_R", spec.gprime * spec.t), _zero(sig)
    if v == "measure_LxSx_R":
        return arm_kick("Lx_sigma_x_R", "Lx_sigma_x_L", spec.gprime * spec.t), _zero(sig)
    raise AssertionError(v)


def _apply_exponential(matrix: np.ndarray, coeff: complex, psi: np.ndarray,
                       sig: SpaceSignature) -> np.ndarray:
    """exp(coeff * matrix) @ psi, block-diagonalized over the meter grid when possible."""
    if not np.any(matrix):
        return psi
    axis = _meter_axis(sig)
    if axis == len(sig.factors) - 1:
        size = sig.dimension_of(METER)
        sys_dim = sig.dim // size
        blocks = matrix.reshape(sys_dim, size, sys_dim, size)
        diag = np.ascontiguousarray(np.einsum("aqbq->qab", blocks))
        off_mass = float(np.abs(blocks).sum() - np.abs(diag).sum())
        if off_mass <= 1e-12 * (1.0 + float(np.abs(diag).sum())):
            herm_defect = float(np.max(np.abs(diag - diag.conj().transpose(0, 2, 1))))
            if herm_defect <= 1e-12 * max(1.0, float(np.max(np.abs(diag)))):
                w, v = np.linalg.eigh(diag)  # batched over the grid
                cols = psi.reshape(sys_dim, size).T  # (grid, sys)
                rotated = np.einsum("qji,qj->qi", v.conj(), cols)
                rotated *= np.exp(coeff * w)
                cols = np.einsum("qij,qj->qi", v, rotated)
                return cols.T.reshape(-1)
    return scipy.linalg.expm(coeff * matrix) @ psi


def evolve_exact(spec: CouplingSpec, pre_system: Ket, meter: DiscreteGaussianMeter) -> Ket:
    """Joint state after static noise, the kick, and the remaining noise.

    exp(-i static (t - kick_time)) exp(+i kick_sign kick) exp(-i static kick_time)
    applied to pre_system (x) meter.
    """
    joint = tensor(pre_system, meter.ket(METER))
    sig = joint.signature
    kick, static = build_hamiltonian(spec, sig)
    before = spec.resolved_kick_time
    after = spec.t - before
    psi = joint.amplitudes
    has_static = np.any(static.matrix)
    if has_static and before:
        psi = _apply_exponential(static.matrix, -1j * before, psi, sig)
    psi = _apply_exponential(kick.matrix, 1j * spec.kick_sign, psi, sig)
    if has_static and after:
        psi = _apply_exponential(static.matrix, -1j * after, psi, sig)
    return Ket(sig, psi)


def evolve_dyson2(spec: CouplingSpec, pre_system: Ket, meter: DiscreteGaussianMeter) -> Ket:
    """Second-order truncated evolution with the kick-squared term dropped.

    Keeps the linear terms, the kick-noise cross terms at the resolved kick
    placement, and the quadratic noise term; drops the O(g^2) kick square,
    so the result is slightly non-unitary.  Warns outside the measurement-
    time regime where that truncation is justified.
    """
    if not spec.in_regime:
        warnings.warn(
            f"couplings g={spec.g}, g'={spec.gprime}, t={spec.t} are outside the "
            "measurement-time regime; the truncation error is not controlled",
            stacklevel=2,
        )
    joint = tensor(pre_system, meter.ket(METER))
    sig = joint.signature
    kick, static = build_hamiltonian(spec, sig)
    s = spec.kick_sign
    psi = joint.amplitudes
    k_psi = kick.matrix @ psi
    out = psi + 1j * s * k_psi
    if np.any(static.matrix):
        before = spec.resolved_kick_time
        after = spec.t - before
        n_psi = static.matrix @ psi
        out = out - 1j * spec.t * n_psi - 0.5 * spec.t**2 * (static.matrix @ n_psi)
        if before:
            out = out + s * before * (kick.matrix @ n_psi)
        if after:
            out = out + s * after * (static.matrix @ k_psi)
    return Ket(sig, out)


def post_select_meter(joint: Ket, post_system: Ket) -> Ket:
    """Partial inner product <post_system| joint>, an unnormalized meter ket.

    The squared norm of the result is the post-selection probability.
    """
    sig = joint.signature
    axis = _meter_axis(sig)
    if axis != len(sig.factors) - 1:
        raise SignatureError("joint state must carry the meter as its last factor")
    expected = sig.drop([METER])
    if post_system.signature != expected:
        raise SignatureError(
            f"post-selection on {post_system.signature} does not match system "
            f"factors {expected}"
        )
    size = sig.dimension_of(METER)
    sys_dim = sig.dim // size
    meter_amps = post_system.amplitudes.conj() @ joint.amplitudes.reshape(sys_dim, size)
    norm = float(np.linalg.norm(meter_amps))
    scale = joint.norm() * post_system.norm()
    if norm <= 1e-14 * max(scale, 1e-300):
        raise AnnihilationError(
            f"post-selection annihilated the state (residual norm {norm:.3e})"
        )
    return Ket(SpaceSignature(((METER, size),)), meter_amps)


def fit_effective_weak_value(final_meter, reference: DiscreteGaussianMeter,
                             g: float) -> EffectiveWeakValueFit:
    """Weighted least squares for log(final_k / reference_k) = a + i g q_k A.

    Grid points are weighted by |reference|^2 so tail noise cannot dominate;
    points below the 1e-8 support threshold are excluded.
    """
    if g <= 0:
        raise ValueError(f"fit requires a positive coupling, got g={g}")
    final = np.asarray(final_meter.amplitudes if isinstance(final_meter, Ket) else final_meter,
                       dtype=complex).reshape(-1)
    ref = np.asarray(reference.amplitudes)
    if final.shape != ref.shape:
        raise SignatureError("final and reference meters live on different grids")
    if not np.any(final):
        raise ValueError("final meter state is zero")
    # zeros of the post-selected meter have no usable log-ratio
    mask = (np.abs(ref) > FIT_SUPPORT_ATOL) & (np.abs(final) > 0.0)
    q = reference.q[mask]
    weights = np.abs(ref[mask]) ** 2
    if mask.sum() < 2:
        raise IllConditionedFitError("all fit weight sits at a single grid point")
    spread = float(np.sum(weights * q**2) - np.sum(weights * q) ** 2 / np.sum(weights))
    if spread <= 0.0:
        raise IllConditionedFitError("all fit weight sits at a single grid point")
    y = np.log(final[mask] / ref[mask])
    design = np.stack([np.ones(mask.sum(), dtype=complex), 1j * g * q], axis=1)
    root_w = np.sqrt(weights)
    beta, *_ = np.linalg.lstsq(design * root_w[:, None], y * root_w, rcond=None)
    resid = y - design @ beta
    residual = float(np.sqrt(np.sum(weights * np.abs(resid) ** 2) / np.sum(weights)))
    return EffectiveWeakValueFit(value=complex(beta[1]), offset=complex(beta[0]),
                                 residual=residual)


_DISEMBODY_TARGETS = {
    "sigma_zR": "measure_sigma_zR_noisy",
    "LxSx_L": "measure_LxSx_L",
    "LxSx_R": "measure_LxSx_R",
}


def disembodied_measurement(theta: float, alpha: float, target: str, *,
                            g: float = 1e-3, gprime: float = 1e-3, t: float = 1.0,
                            meter: DiscreteGaussianMeter, orbital_dim: int = 2,
                            kick_sign: int = 1) -> tuple[MeterReadout, EffectiveWeakValueFit]:
    """Full noise-isolation run: prepare, kick in one arm, post-select, read.

    ``target`` picks the arm-resolved measurement: the amplified signal
    (sigma_z, right arm), the isolated noise (L_x sigma_x, left arm), or
    the right-arm noise probe expected to read zero.
    """
    if target not in _DISEMBODY_TARGETS:
        raise ValueError(f"target must be one of {sorted(_DISEMBODY_TARGETS)}, got {target!r}")
    pre = named_state("disembody_in", theta=theta, orbital_dim=orbital_dim)
    post = named_state("disembody_f", alpha=alpha, orbital_dim=orbital_dim)
    spec = CouplingSpec(variant=_DISEMBODY_TARGETS[target], g=g, gprime=gprime, t=t,
                        kick_sign=kick_sign)
    joint = evolve_exact(spec, pre, meter)
    final = post_select_meter(joint, post)
    return meter_readout(final), fit_effective_weak_value(final, meter, spec.fit_coupling)


def parallel_arm_readout(variant: str, theta: float, alpha: float, arm: str, *,
                         g: float = 1e-3, gprime: float = 1e-3, t: float = 100.0,
                         meter: DiscreteGaussianMeter,
                         kick_sign: int = 1) -> EffectiveWeakValueFit:
    """Per-arm pointer fit for the noise-isolation pipeline under parallel noise.

    Arm 'R' measures the signal sigma_z_R; arm 'L' measures the arm-resolved
    noise observable, whose reading is itself sigma_z-mediated.  Uses the
    orbital triplet: the L_z coupling acts only through the forbidden
    direction and would vanish identically on the doublet.
    """
    pre = named_state("disembody_in", theta=theta, orbital_dim=3)
    post = named_state("disembody_f", alpha=alpha, orbital_dim=3)
    spec = CouplingSpec(variant=variant, g=g, gprime=gprime, t=t, measure_arm=arm,
                        kick_sign=kick_sign)
    joint = evolve_exact(spec, pre, meter)
    final = post_select_meter(joint, post)
    return fit_effective_weak_value(final, meter, spec.fit_coupling)
