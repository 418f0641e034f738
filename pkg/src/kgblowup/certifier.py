"""Blow-up certificates: static conditions, trajectory monitors, time bound.

The concavity argument makes G^(-alpha), alpha = eps/4, positive, decreasing
and concave, so it lies below its tangent at t = 0 and must vanish before
the tangent does, at t = 4 G(0) / (eps G'(0)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .functionals import DiagnosticsRecord
from .initial_data import StaticCertificate, check_theorem22, norm_threshold
from .solver import BLOWUP_DETECTED, TrajectoryResult

CERTIFIED = "certified_blowup"
STATIC_FAIL = "static_fail"
MONITOR_VIOLATION = "monitor_violation"
INCONCLUSIVE = "inconclusive"
EXIT_CODES = {CERTIFIED: 0, STATIC_FAIL: 2, MONITOR_VIOLATION: 3, INCONCLUSIVE: 4}

GAP_RTOL = 1e-9
SECOND_DIFF_RTOL = 1e-10
CHORD_ATOL = 1e-6

static_certify = check_theorem22


def blowup_time_bound(G0: float, dG0: float, eps: float):
    """(tangent-line bound 4 G0/(eps dG0), printed expression eps G0/(4 dG0))."""
    if not (G0 > 0 and dG0 > 0 and eps > 0):
        raise ValueError("blow-up time bound needs G0 > 0, dG0 > 0, eps > 0")
    alpha = eps / 4.0
    return G0 / (alpha * dG0), eps * G0 / (4.0 * dG0)


@dataclass
class Violation:
    t: float
    kind: str
    value: float


@dataclass
class MonitorReport:
    violations: List[Violation] = field(default_factory=list)
    records_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def counts(self) -> dict:
        out = {}
        for v in self.violations:
            out[v.kind] = out.get(v.kind, 0) + 1
        return out


def second_differences(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Three-point second derivative on a nonuniform grid."""
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    return 2.0 * ((g[2:] - g[1:-1]) / h2 - (g[1:-1] - g[:-2]) / h1) / (h1 + h2)


def monitor_trajectory(records: Sequence[DiagnosticsRecord], eps: float,
                       t_bound: Optional[float] = None, E0: Optional[float] = None) -> MonitorReport:
    """Check the inequalities of the concavity argument record by record.

    Per record: I < 0, G' > 0, the concavity gap is non-negative up to a
    relative tolerance and (for t > 0, when ``E0`` is given) G exceeds
    2(2+eps)/eps E0.  Per consecutive triple: G^(-alpha) has non-positive
    second differences up to roundoff.  With ``t_bound`` the tangent-line
    (chord) bound on G^(-alpha) is checked too.
    """
    if len(records) < 3:
        raise ValueError("monitoring needs at least three records")
    rep = MonitorReport(records_checked=len(records))
    thr = norm_threshold(E0, eps) if E0 is not None else None
    for rec in records:
        if not rec.I < 0:
            rep.violations.append(Violation(rec.t, "nehari_nonnegative", rec.I))
        if not rec.dG > 0:
            rep.violations.append(Violation(rec.t, "dG_nonpositive", rec.dG))
        scale = abs(rec.ddG * rec.G) + rec.dG ** 2
        if not rec.concavity_gap >= -GAP_RTOL * scale:
            rep.violations.append(Violation(rec.t, "concavity_gap", rec.concavity_gap))
        if thr is not None and rec.t > 0 and not rec.G > thr:
            rep.violations.append(Violation(rec.t, "norm_below_threshold", rec.G - thr))

    t = np.array([r.t for r in records])
    G = np.array([r.G for r in records])
    alpha = eps / 4.0
    with np.errstate(divide="ignore", invalid="ignore"):
        g = G ** (-alpha)
    d2 = second_differences(t, g)
    h1, h2 = t[1:-1] - t[:-2], t[2:] - t[1:-1]
    tol = SECOND_DIFF_RTOL * (np.abs(g[:-2]) + np.abs(g[1:-1]) + np.abs(g[2:])) / (h1 * h2)
    for i in np.nonzero(~(d2 <= tol))[0]:
        rep.violations.append(Violation(float(t[i + 1]), "convexity_of_G_power", float(d2[i])))
    if t_bound is not None:
        excess = g - g[0] * (1.0 - t / t_bound)
        for i in np.nonzero(~(excess <= CHORD_ATOL))[0]:
            rep.violations.append(Violation(float(t[i]), "chord_bound", float(excess[i])))
    return rep


@dataclass
class BlowupCertificate:
    static: StaticCertificate
    alpha: float
    t_bound_derived: float
    t_bound_paper_expr: float
    trajectory: Optional[MonitorReport]
    outcome: Optional[str]
    t_detect: Optional[float]
    verdict: str

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def items(self):
        out = list(self.static.items())
        out += [
            ("alpha", self.alpha),
            ("t_bound_derived", self.t_bound_derived),
            ("t_bound_paper_expr", self.t_bound_paper_expr),
            ("solver_outcome", self.outcome or "not_run"),
            ("t_detect", self.t_detect if self.t_detect is not None else math.nan),
        ]
        if self.trajectory is not None:
            out.append(("records_checked", self.trajectory.records_checked))
            out.append(("monitor_violations", len(self.trajectory.violations)))
            for kind, n in sorted(self.trajectory.counts().items()):
                out.append((f"violations_{kind}", n))
        out.append(("verdict", self.verdict))
        return out

    def report(self) -> str:
        lines = ["Blow-up certificate", "==================="]
        s = self.static
        for label, ok, detail in [
            ("E(0) > 0", s.tc1, f"E(0) = {s.E0:.10g}"),
            ("||u0||^2 >= 2(2+eps)/eps E(0)", s.tc2, f"{s.norm_u0_sq:.10g} vs {s.threshold:.10g}"),
            ("I(u0) < 0", s.tc3, f"I(u0) = {s.I0:.10g}"),
            ("<u0, u1> > 0", s.tc4, f"<u0,u1> = {s.inner_u0_u1:.10g}"),
        ]:
            lines.append(f"  [{'pass' if ok else 'FAIL'}] {label:32s} {detail}")
        lines.append(f"  eps = {s.epsilon:g}, alpha = {self.alpha:g}")
        lines.append(f"  blow-up time bound (tangent line) = {self.t_bound_derived:.10g}")
        lines.append(f"  printed expression eps G0/(4 G0') = {self.t_bound_paper_expr:.10g}")
        if self.outcome is not None:
            td = "" if self.t_detect is None else f" at t = {self.t_detect:.10g}"
            lines.append(f"  solver outcome: {self.outcome}{td}")
        if self.trajectory is not None:
            if self.trajectory.ok:
                lines.append(f"  monitors: {self.trajectory.records_checked} records, no violations")
            else:
                lines.append(f"  monitors: {len(self.trajectory.violations)} violations {self.trajectory.counts()}")
                for v in self.trajectory.violations[:10]:
                    lines.append(f"    t = {v.t:.10g}  {v.kind}  ({v.value:.3e})")
        lines.append(f"  verdict: {self.verdict}")
        return "\n".join(lines)


def decide(static: StaticCertificate, trajectory: Optional[MonitorReport],
           outcome: Optional[str], t_detect: Optional[float], t_bound: float) -> str:
    if not static.passed:
        return STATIC_FAIL
    if trajectory is not None and not trajectory.ok:
        return MONITOR_VIOLATION
    if outcome == BLOWUP_DETECTED:
        return CERTIFIED if t_detect is not None and t_detect <= t_bound else MONITOR_VIOLATION
    return INCONCLUSIVE


def assemble(static: StaticCertificate, result: Optional[TrajectoryResult] = None,
             trajectory: Optional[MonitorReport] = None) -> BlowupCertificate:
    eps = static.epsilon
    if static.norm_u0_sq > 0 and static.inner_u0_u1 > 0:
        t_der, t_pap = blowup_time_bound(static.norm_u0_sq, 2.0 * static.inner_u0_u1, eps)
    else:
        t_der = t_pap = math.nan
    outcome = result.outcome if result is not None else None
    t_detect = result.t_detect if result is not None else None
    verdict = decide(static, trajectory, outcome, t_detect, t_der)
    return BlowupCertificate(static, eps / 4.0, t_der, t_pap, trajectory, outcome, t_detect, verdict)


def certify_run(static: StaticCertificate, result: TrajectoryResult) -> BlowupCertificate:
    """Monitor a finished run and assemble its certificate.

    Monitors only run when the static conditions hold, since the
    inequalities they check are consequences of those conditions.
    """
    trajectory = None
    if static.passed and len(result.records) >= 3:
        t_der, _ = blowup_time_bound(static.norm_u0_sq, 2.0 * static.inner_u0_u1, static.epsilon)
        trajectory = monitor_trajectory(result.records, static.epsilon, t_der, static.E0)
    return assemble(static, result, trajectory)
