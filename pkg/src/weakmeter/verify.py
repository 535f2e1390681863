"""Built-in verification suite: every headline result, checked at fixed tolerance.

Each check returns a :class:`CheckResult`; the CLI renders them as a
pass/fail table and the test suite asserts them one by one.  With
``kick_sign=-1`` the pointer-fit checks run under the alternate kick
bookkeeping and are reported as informational rather than pass/fail (their
fitted values come out sign-flipped by construction).
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    CouplingSpec,
    disembodied_measurement,
    evolve_dyson2,
    evolve_exact,
    fit_effective_weak_value,
    parallel_arm_readout,
    post_select_meter,
)
from .hilbert import Ket
from .meter import continuous_reference, make_meter, moments
from .optics import named_state
from .weakvalue import observable, weak_value

__all__ = ["CheckResult", "CHECK_NAMES", "run_checks", "render_table"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    informational: bool = False
    lines: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.informational:
            return "INFO"
        return "PASS" if self.passed else "FAIL"


def _fit_after(spec: CouplingSpec, pre: Ket, post: Ket, meter):
    joint = evolve_exact(spec, pre, meter)
    final = post_select_meter(joint, post)
    return fit_effective_weak_value(final, meter, spec.fit_coupling)


def check_cheshire(kick_sign: int = 1) -> CheckResult:
    """Quartet (pi_L, pi_R, sigma_z_L, sigma_z_R) = (1, 0, 0, 1) to 1e-12."""
    start = time.perf_counter()
    pre = named_state("cheshire_in")
    post = named_state("cheshire_f")
    expected = {"pi_L": 1.0, "pi_R": 0.0, "sigma_z_L": 0.0, "sigma_z_R": 1.0}
    lines, ok = [], True
    for obs_id, want in expected.items():
        got = weak_value(pre, post, observable(obs_id)).value
        good = abs(got - want) <= 1e-12
        ok &= good
        lines.append(f"{obs_id}: {got:.3e} (expect {want}) {'ok' if good else 'BAD'}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1.0
    lines.append(f"runtime {elapsed * 1e3:.1f} ms (< 1 s)")
    return CheckResult("cheshire", ok, lines=lines)


def check_amplification(kick_sign: int = 1) -> CheckResult:
    """sigma_z_R = tan(theta/2) with the rest of the table pinned, to 1e-12."""
    post = named_state("amp_f")
    thetas = [np.pi / 6, np.pi / 4, np.pi / 2, 2 * np.pi / 3, 0.9 * np.pi]
    fixed = {"pi_L": 1.0, "pi_R": 0.0, "sigma_z_L": 0.0, "sigma_x_L": 1.0, "sigma_x_R": 0.0}
    lines, ok = [], True
    for theta in thetas:
        pre = named_state("amp_in", theta=theta)
        errs = [abs(weak_value(pre, post, observable(o)).value - want)
                for o, want in fixed.items()]
        got = weak_value(pre, post, observable("sigma_z_R")).value
        errs.append(abs(got - np.tan(theta / 2)))
        good = max(errs) <= 1e-12
        ok &= good
        lines.append(
            f"theta={theta:.6f}: sigma_z_R = {got.real:.12f} "
            f"(tan(theta/2) = {np.tan(theta / 2):.12f}), max err {max(errs):.2e}"
        )
    beyond = weak_value(named_state("amp_in", theta=0.9 * np.pi), post,
                        observable("sigma_z_R")).value
    good = beyond.real > 1.0
    ok &= good
    lines.append(f"theta=0.9pi gives {beyond.real:.4f} > 1: beyond the eigenvalue range")
    return CheckResult("amplification", ok, lines=lines)


def check_noisy_fit(kick_sign: int = 1) -> CheckResult:
    """Exact evolution + pointer fit against (g't + i) tan(alpha), 5% relative.

    The first-order formula and the exact pointer response differ at order
    g't here: the preparation is an eigenstate of the noise operator, so
    with the kick after the noise window the fit returns i tan(alpha)
    exactly.  The 0.05 points sit just inside 5%; the 0.1 points do not.
    Both fitted and formula values are reported so the gap is visible.
    """
    meter = make_meter(64, 4.0)
    lines, ok = [], True
    for gpt in (0.05, 0.1):
        for alpha in (np.pi / 6, np.pi / 4, np.pi / 3):
            start = time.perf_counter()
            pre = named_state("noisy_in")
            post = named_state("noisy_f", alpha=alpha)
            spec = CouplingSpec(variant="spin_orbit", g=1e-3, gprime=gpt, t=1.0,
                                kick_sign=kick_sign)
            fit = _fit_after(spec, pre, post, meter)
            elapsed = time.perf_counter() - start
            target = (gpt + 1j) * np.tan(alpha)
            rel = abs(fit.value - target) / abs(target)
            good = rel <= 0.05 and elapsed < 10.0
            ok &= good
            lines.append(
                f"g't={gpt} alpha={alpha:.4f}: fit {fit.value:.6f}, "
                f"formula {target:.6f}, rel err {rel:.2%} "
                f"({elapsed:.2f} s) {'ok' if good else 'BAD'}"
            )
    lines.append("exact-dynamics prediction is i*tan(alpha); see the noisy-fit notes")
    return CheckResult("noisy_fit", ok, informational=kick_sign != 1, lines=lines)


def check_disembodiment(kick_sign: int = 1) -> CheckResult:
    """Quartet (0, tan(theta/2)tan(alpha), 1, 0) exact; meter fits within 1-2%."""
    meter = make_meter(64, 4.0)
    lines, ok = [], True
    cases = [(np.pi / 2, np.pi / 4, 0.01), (2 * np.pi / 3, np.pi / 3, 0.02)]
    for theta, alpha, fit_tol in cases:
        pre = named_state("disembody_in", theta=theta)
        post = named_state("disembody_f", alpha=alpha)
        signal = np.tan(theta / 2) * np.tan(alpha)
        table = {"sigma_z_L": 0.0, "sigma_z_R": signal, "Lx_sigma_x_L": 1.0,
                 "Lx_sigma_x_R": 0.0}
        errs = [abs(weak_value(pre, post, observable(o)).value - want)
                for o, want in table.items()]
        formula_ok = max(errs) <= 1e-12
        ok &= formula_ok
        lines.append(f"theta={theta:.4f} alpha={alpha:.4f}: quartet max err {max(errs):.2e}")

        _, fit_sig = disembodied_measurement(theta, alpha, "sigma_zR", g=1e-3,
                                             meter=meter, kick_sign=kick_sign)
        _, fit_noise = disembodied_measurement(theta, alpha, "LxSx_L", gprime=1e-3,
                                               t=1.0, meter=meter, kick_sign=kick_sign)
        _, fit_zero = disembodied_measurement(theta, alpha, "LxSx_R", gprime=1e-3,
                                              t=1.0, meter=meter, kick_sign=kick_sign)
        want_sig = kick_sign * signal
        want_noise = kick_sign * 1.0
        rel_sig = abs(fit_sig.value - want_sig) / abs(want_sig)
        rel_noise = abs(fit_noise.value - want_noise)
        zero_mag = abs(fit_zero.value)
        good = rel_sig <= fit_tol and rel_noise <= fit_tol and zero_mag <= 1e-3
        ok &= good
        lines.append(
            f"  fits: sigma_zR {fit_sig.value:.6f} (rel {rel_sig:.2%}), "
            f"LxSx_L {fit_noise.value:.6f} (err {rel_noise:.2%}), "
            f"LxSx_R |{zero_mag:.2e}| <= 1e-3 {'ok' if good else 'BAD'}"
        )
    return CheckResult("disembodiment", ok, lines=lines)


_POINTER_CASES = (
    ("cheshire_in", {}, "cheshire_f", {}, "measure_sigma_zR", 2, 1.0),
    ("amp_in", {"theta": 2 * np.pi / 3}, "amp_f", {}, "measure_sigma_zR", 2, np.sqrt(3.0)),
    ("disembody_in", {"theta": 2 * np.pi / 3}, "disembody_f", {"alpha": np.pi / 3},
     "measure_sigma_zR_noisy", 2, 3.0),
)


def check_pointer_shift(kick_sign: int = 1) -> CheckResult:
    """Richardson-extrapolated mean_p / g matches Re(A_w) to 0.1%."""
    meter = make_meter(64, 4.0)
    lines, ok = [], True
    for pre_id, pre_kw, post_id, post_kw, variant, dim, expect in _POINTER_CASES:
        pre = named_state(pre_id, orbital_dim=dim, **pre_kw)
        post = named_state(post_id, orbital_dim=dim, **post_kw)

        def shift_over_g(g: float) -> float:
            spec = CouplingSpec(variant=variant, g=g, kick_sign=kick_sign)
            joint = evolve_exact(spec, pre, meter)
            final = post_select_meter(joint, post)
            mean_p, _ = moments(final.amplitudes, "p")
            return mean_p / g

        f = [shift_over_g(1e-2 / 2**k) for k in range(3)]
        extrapolated = (8 * f[2] - 6 * f[1] + f[0]) / 3
        want = kick_sign * expect
        rel = abs(extrapolated - want) / abs(want)
        good = rel <= 1e-3
        ok &= good
        lines.append(
            f"{pre_id}/{post_id}: mean_p/g -> {extrapolated:.6f}, "
            f"Re(A_w) = {want:.6f}, rel err {rel:.2e} {'ok' if good else 'BAD'}"
        )
    return CheckResult("pointer_shift", ok, informational=kick_sign != 1, lines=lines)


def check_dyson(kick_sign: int = 1) -> CheckResult:
    """Exact-minus-truncated error scales with exponent >= 2.5 over 4 octaves."""
    meter = make_meter(32, 4.0)
    rng = np.random.default_rng(20240817)
    pre_template = named_state("noisy_in")
    states = []
    for _ in range(3):
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        states.append(Ket(pre_template.signature, amps / np.linalg.norm(amps)))
    scales = np.array([1.0, 0.5, 0.25, 0.125])
    errors = []
    for s in scales:
        spec = CouplingSpec(variant="spin_orbit", g=1e-4 * s, gprime=0.2 * s, t=1.0,
                            kick_sign=kick_sign)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            err = max(
                np.linalg.norm(evolve_exact(spec, ket, meter).amplitudes
                               - evolve_dyson2(spec, ket, meter).amplitudes)
                for ket in states
            )
        errors.append(err)
    slope = float(np.polyfit(np.log(scales), np.log(errors), 1)[0])
    ok = slope >= 2.5
    scale_text = ", ".join(f"{s:g}" for s in scales)
    lines = [f"errors over scales [{scale_text}]: " + ", ".join(f"{e:.3e}" for e in errors),
             f"log-log slope {slope:.3f} (>= 2.5)"]
    return CheckResult("dyson", ok, lines=lines)


def check_convergence(kick_sign: int = 1) -> CheckResult:
    """Discrete moments reach the continuous closed forms: <1e-3 at N=16*delta^2.

    The error halves (at least) under N-doubling until it saturates at the
    grid-discreteness floor, which sits far below the 1e-3 target.
    """
    g, a_w = 0.05, 1.0 + 1.0j
    lines, ok = [], True
    for delta in (1.0, 2.0):
        ref = continuous_reference(delta, g, a_w)
        targets = np.array([ref.mean_q, ref.mean_p, ref.var_q, ref.var_p])

        def max_rel_err(n: int) -> float:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                meter = make_meter(n, delta)
            shifted = np.exp(1j * g * meter.q * a_w) * meter.amplitudes
            mq, vq = moments(shifted, "q")
            mp, vp = moments(shifted, "p")
            got = np.array([mq, mp, vq, vp])
            return float(np.max(np.abs(got - targets) / np.abs(targets)))

        n_target = int(16 * delta**2)
        err_target = max_rel_err(n_target)
        good = err_target < 1e-3
        ok &= good
        lines.append(f"delta={delta}: N={n_target} max rel err {err_target:.2e} (< 1e-3)")

        grid = [int(m * delta**2) for m in (2, 4, 8, 16)]
        errs = [max_rel_err(n) for n in grid]
        halved = all(
            later <= max(earlier / 2, 1e-6)
            for earlier, later in zip(errs, errs[1:])
        )
        ok &= halved
        lines.append(
            "  doubling N: " + ", ".join(f"N={n}: {e:.2e}" for n, e in zip(grid, errs))
            + (" (halves until the discreteness floor)" if halved else " NOT halving")
        )
    return CheckResult("convergence", ok, lines=lines)


def check_parallel_noise(kick_sign: int = 1) -> CheckResult:
    """Both arms keep a sigma_z-mediated response above 1e-3 under parallel noise."""
    meter = make_meter(32, 4.0)
    lines, ok = [], True
    for variant in ("parallel_1", "parallel_2"):
        worst = {"L": np.inf, "R": np.inf}
        for theta in (0.25, 0.7, 1.15):
            for alpha in (0.25, 0.7, 1.15):
                for arm in ("L", "R"):
                    fit = parallel_arm_readout(variant, theta, alpha, arm,
                                               g=1e-3, gprime=1e-3, t=100.0,
                                               meter=meter, kick_sign=kick_sign)
                    worst[arm] = min(worst[arm], abs(fit.value))
        good = worst["L"] > 1e-3 and worst["R"] > 1e-3
        ok &= good
        lines.append(
            f"{variant}: min |fit| over theta,alpha in (0.2,1.2): "
            f"left arm {worst['L']:.4f}, right arm {worst['R']:.4f} "
            f"(both > 1e-3) {'ok' if good else 'BAD'}"
        )
    return CheckResult("parallel_noise", ok, informational=kick_sign != 1, lines=lines)


def check_three_body(kick_sign: int = 1) -> CheckResult:
    """Adjudicate i tan(alpha) - 1 (direct) against 1 + i tan(alpha) (quoted)."""
    meter = make_meter(64, 4.0)
    alpha = np.pi / 4
    direct = 1j * np.tan(alpha) - 1.0
    quoted = 1.0 + 1j * np.tan(alpha)
    pre = named_state("noisy_in")
    post = named_state("noisy_f", alpha=alpha)
    spec = CouplingSpec(variant="three_body", g=1e-3, kick_sign=kick_sign)
    fit = _fit_after(spec, pre, post, meter)
    probed = kick_sign * fit.value
    rel_direct = abs(probed - direct) / abs(direct)
    rel_quoted = abs(probed - quoted) / abs(quoted)
    matches = [name for name, rel in (("direct", rel_direct), ("quoted", rel_quoted))
               if rel <= 0.05]
    ok = len(matches) == 1
    verdict = matches[0] if ok else "ambiguous"
    lines = [
        f"direct ratio:  {direct:.6f}",
        f"quoted form:   {quoted:.6f}",
        f"meter oracle:  {probed:.6f} (rel to direct {rel_direct:.2%}, "
        f"to quoted {rel_quoted:.2%})",
        f"verdict: the dynamics agree with the {verdict} value",
    ]
    return CheckResult("three_body", ok, informational=kick_sign != 1, lines=lines)


CHECKS = {
    "cheshire": check_cheshire,
    "amplification": check_amplification,
    "noisy_fit": check_noisy_fit,
    "disembodiment": check_disembodiment,
    "pointer_shift": check_pointer_shift,
    "dyson": check_dyson,
    "convergence": check_convergence,
    "parallel_noise": check_parallel_noise,
    "three_body": check_three_body,
}

CHECK_NAMES = tuple(CHECKS)


def run_checks(only=None, kick_sign: int = 1) -> list[CheckResult]:
    names = list(only) if only else list(CHECK_NAMES)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check name(s) {unknown}; valid: {list(CHECK_NAMES)}")
    return [CHECKS[name](kick_sign=kick_sign) for name in names]


def render_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for res in results:
        lines.append(f"{res.name:<{width}}  {res.status}")
        for detail in res.lines:
            lines.append(f"{'':<{width}}    {detail}")
    failed = [r.name for r in results if not r.passed and not r.informational]
    lines.append("")
    if failed:
        lines.append(f"FAILED: {', '.join(failed)}")
    else:
        lines.append("all checks passed")
    return "\n".join(lines) + "\n"
