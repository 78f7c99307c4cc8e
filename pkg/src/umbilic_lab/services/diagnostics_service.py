import logging
import math
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from ..core.config import settings
from ..core.exceptions import EmptyWindow, OutOfRange, OutsideWedge
from ..models import CurvatureDiagram, CurvatureSamples, as_samples
from ..schemas.certificate import Certificate, Witness
from ..schemas.wedge import TauResult, WedgeAnalysis, WedgeParams

log = logging.getLogger(__name__)


def wedge_params(
    mu: Optional[float] = None, lam: Optional[float] = None, c: float = 0.0
) -> WedgeParams:
    """Build (c, Lambda, m1, m2, mu) from either mu in [0, 1) or Lambda <= -1."""
    if (mu is None) == (lam is None):
        raise ValueError("Exactly one of mu and lam must be given.")
    if mu is not None:
        if not 0.0 <= mu < 1.0:
            raise OutOfRange(f"mu = {mu!r} is outside [0, 1).", details={"mu": mu})
        lam = (mu + 1.0) / (mu - 1.0)
    else:
        assert lam is not None
        if not (math.isfinite(lam) and lam <= -1.0):
            raise OutOfRange(f"Lambda = {lam!r} must be <= -1.", details={"lam": lam})
        mu = (lam + 1.0) / (lam - 1.0)
    m2 = lam - math.sqrt(max(lam * lam - 1.0, 0.0))
    m1 = 1.0 / m2
    return WedgeParams(c=c, lam=lam, m1=m1, m2=m2, mu=mu)


def params_from_bounds(H0: float, n: int = 101) -> Tuple[float, float]:  # noqa: N803
    """Quasi-CMC constants (c=1, mu) for a sphere with 1 <= H <= H0.

    Also confirms H^2 (1 - mu) - 2H + 1 + mu <= 0 on a grid of [1, H0].
    """
    if not H0 >= 1.0:
        raise OutOfRange(f"H0 = {H0!r} must be >= 1.", details={"H0": H0})
    mu = (H0 - 1.0) / (H0 + 1.0)
    grid = np.linspace(1.0, H0, n)
    quad = grid * grid * (1.0 - mu) - 2.0 * grid + 1.0 + mu
    worst = float(np.max(quad))
    if worst > settings.EPS_CERT * (1.0 + H0 * H0):
        raise OutOfRange(
            f"Bound inequality violated on [1, {H0}] (max {worst!r}).",
            details={"max": worst},
        )
    return 1.0, mu


def _scale(samples: CurvatureSamples) -> np.ndarray:
    return 1.0 + samples.H * samples.H + np.abs(samples.K)


def build_certificate(
    claim_id: str,
    samples: CurvatureSamples,
    margins: ArrayLike,
    tol: ArrayLike,
    strict: bool = False,
    details: Optional[Dict[str, Any]] = None,
) -> Certificate:
    """Reduce per-sample margins to a certificate with the worst sample as witness.

    Non-strict claims need margin >= -tol and report the raw margin; strict
    claims need margin > tol and report the shifted margin - tol.
    """
    margins = np.asarray(margins, dtype=float)
    tol = np.broadcast_to(np.asarray(tol, dtype=float), margins.shape)
    n = int(margins.size)
    if n == 0:
        return Certificate(
            claim_id=claim_id, verdict="holds", sample_count=0, details=details or {}
        )
    slack = margins - tol if strict else margins + tol
    i = int(np.argmin(slack))
    holds = bool(slack[i] > 0.0) if strict else bool(slack[i] >= 0.0)
    reported = float(slack[i]) if strict else float(margins[i])
    if not holds and reported >= 0.0:
        reported = min(float(slack[i]), float(np.nextafter(0.0, -1.0)))
    witness = Witness(
        position=(float(samples.x[i]), float(samples.y[i])),
        kappa1=float(samples.kappa1[i]),
        kappa2=float(samples.kappa2[i]),
        margin=reported,
    )
    verdict = "holds" if holds else "fails"
    if not holds:
        log.warning(
            f"Certificate '{claim_id}' fails at {witness.position} "
            f"(margin {reported!r})."
        )
    else:
        log.info(f"Certificate '{claim_id}' holds on {n} samples.")
    return Certificate(
        claim_id=claim_id,
        verdict=verdict,
        witness=witness,
        sample_count=n,
        details=details or {},
    )


def quasi_cmc_margins(samples: CurvatureSamples, c: float, mu: float) -> np.ndarray:
    """Per-sample mu (H^2 - K) - (H - c)^2."""
    return mu * (samples.H * samples.H - samples.K) - (samples.H - c) ** 2


def wedge_margins(samples: CurvatureSamples, c: float, lam: float) -> np.ndarray:
    """Per-sample 2 Lambda u v - u^2 - v^2 with u = k1 - c and v = k2 - c."""
    u = samples.kappa1 - c
    v = samples.kappa2 - c
    return 2.0 * lam * u * v - u * u - v * v


def check_quasi_cmc(
    points: "CurvatureSamples | Sequence[Any]",
    c: float,
    mu: float,
    eps_cert: Optional[float] = None,
    claim_id: str = "1.1/quasi-cmc",
) -> Certificate:
    """Certify (H - c)^2 <= mu (H^2 - K) at every sample."""
    if not 0.0 <= mu < 1.0:
        raise OutOfRange(f"mu = {mu!r} is outside [0, 1).", details={"mu": mu})
    samples = as_samples(points)
    eps = settings.EPS_CERT if eps_cert is None else eps_cert
    margins = quasi_cmc_margins(samples, c, mu)
    return build_certificate(
        claim_id,
        samples,
        margins,
        eps * _scale(samples),
        details={"c": c, "mu": mu, "inequality": "(H-c)^2 <= mu (H^2-K)"},
    )


def check_wedge(
    points: "CurvatureSamples | Sequence[Any]",
    params: WedgeParams,
    eps_cert: Optional[float] = None,
    claim_id: str = "1.1/wedge",
) -> Certificate:
    """Certify 2 Lambda (k1 - c)(k2 - c) >= (k1 - c)^2 + (k2 - c)^2 pointwise.

    The wedge margin is 4 / (1 - mu) times the quasi-CMC margin, and the
    tolerance is scaled the same way, so both verdicts agree sample by sample.
    """
    samples = as_samples(points)
    eps = settings.EPS_CERT if eps_cert is None else eps_cert
    factor = 4.0 / (1.0 - params.mu)
    tol_q = eps * _scale(samples)
    margins = wedge_margins(samples, params.c, params.lam)
    q_margins = quasi_cmc_margins(samples, params.c, params.mu)
    agree = (margins >= -factor * tol_q) == (q_margins >= -tol_q)
    disagreements = int(np.count_nonzero(~agree))
    if disagreements:
        log.warning(f"Wedge and quasi-CMC verdicts disagree at {disagreements} points.")
    return build_certificate(
        claim_id,
        samples,
        margins,
        factor * tol_q,
        details={
            "c": params.c,
            "lam": params.lam,
            "mu": params.mu,
            "agrees_with_quasi_cmc": disagreements == 0,
            "disagreements": disagreements,
        },
    )


def check_alexandrov(
    points: "CurvatureSamples | Sequence[Any]",
    c: float,
    eps_cert: Optional[float] = None,
    eps_eq: Optional[float] = None,
    eps_contact: Optional[float] = None,
    claim_id: str = "2/alexandrov",
) -> Certificate:
    """Certify (k1 - c)(k2 - c) <= 0 with equality only where k1 = k2 = c.

    A sample is a contact point when one of |k1 - c|, |k2 - c| is below
    eps_contact; there the other one must be below eps_eq. The witness margin
    is the smaller of the two tolerance-shifted slacks.
    """
    samples = as_samples(points)
    eps = settings.EPS_CERT if eps_cert is None else eps_cert
    e_eq = settings.EPS_EQ if eps_eq is None else eps_eq
    e_contact = settings.EPS_CONTACT if eps_contact is None else eps_contact
    u = np.abs(samples.kappa1 - c)
    v = np.abs(samples.kappa2 - c)
    product = (samples.kappa1 - c) * (samples.kappa2 - c)
    sign_slack = eps * _scale(samples) - product
    contact = np.minimum(u, v) <= e_contact
    equality_slack = np.where(contact, e_eq - np.maximum(u, v), np.inf)
    slack = np.minimum(sign_slack, equality_slack)
    return build_certificate(
        claim_id,
        samples,
        slack,
        0.0,
        details={
            "c": c,
            "contact_points": int(np.count_nonzero(contact)),
            "equality_violations": int(np.count_nonzero(equality_slack < 0)),
        },
    )


def tau_interpolant(
    kappa1: float, kappa2: float, params: WedgeParams, eps: Optional[float] = None
) -> TauResult:
    """Weight tau with tau W1 + (1 - tau) W2 = 0, where Wi = -m_i (k1 - c) + k2 - c."""
    eps = settings.EPS_CERT if eps is None else eps
    tol = eps * (1.0 + kappa1 * kappa1 + kappa2 * kappa2)
    u = kappa1 - params.c
    v = kappa2 - params.c
    w1 = -params.m1 * u + v
    w2 = -params.m2 * u + v
    if w1 > tol or w2 < -tol:
        raise OutsideWedge(
            f"({kappa1!r}, {kappa2!r}) lies outside the wedge.",
            details={"w1": w1, "w2": w2},
        )
    if max(abs(u), abs(v)) <= tol or params.m1 == params.m2:
        return TauResult(tau=0.5, undetermined=True, w1=w1, w2=w2)
    denom = w2 - w1
    if denom <= 0.0:
        return TauResult(tau=0.5, undetermined=True, w1=w1, w2=w2)
    tau = min(1.0, max(0.0, w2 / denom))
    return TauResult(tau=tau, w1=w1, w2=w2)


def diagram_wedge_analysis(
    d: "CurvatureDiagram | CurvatureSamples",
    c: float,
    window_radius: Optional[float] = None,
    eps_eq: Optional[float] = None,
) -> WedgeAnalysis:
    """Observed slope interval of (k2 - c)/(k1 - c) over the window around (c, c)."""
    diagram = CurvatureDiagram.from_samples(d) if isinstance(d, CurvatureSamples) else d
    e_eq = settings.EPS_EQ if eps_eq is None else eps_eq
    k1 = np.asarray(diagram.kappa1, dtype=float)
    k2 = np.asarray(diagram.kappa2, dtype=float)
    if window_radius is None:
        scale = float(np.max(np.maximum(np.abs(k1), np.abs(k2)))) if k1.size else 0.0
        window_radius = settings.WINDOW_FRACTION * (scale if scale > 0 else 1.0)
    u = k1 - c
    v = k2 - c
    inside = np.maximum(np.abs(u), np.abs(v)) < window_radius
    n_in = int(np.count_nonzero(inside))
    if n_in == 0:
        raise EmptyWindow(
            f"No diagram point within {window_radius!r} of ({c}, {c}).",
            details={"window_radius": window_radius},
        )
    used = inside & (np.abs(u) >= e_eq)
    n_used = int(np.count_nonzero(used))
    if n_used == 0:
        log.warning("Wedge window holds umbilical points only.")
        return WedgeAnalysis(
            c=c,
            window_radius=window_radius,
            points_in_window=n_in,
            points_used=0,
            verdict="degenerate-umbilical",
        )
    ratios = v[used] / u[used]
    lo, hi = float(np.min(ratios)), float(np.max(ratios))
    holds = hi <= settings.WEDGE_SLOPE_MAX and lo >= settings.WEDGE_SLOPE_MIN
    cusp_like = (settings.WEDGE_SLOPE_MAX < hi <= 0.0) or lo < settings.WEDGE_SLOPE_MIN
    if not holds:
        log.warning(
            f"Observed wedge slopes [{lo!r}, {hi!r}] are not bounded away "
            "from 0 and -inf."
        )
    return WedgeAnalysis(
        c=c,
        window_radius=window_radius,
        points_in_window=n_in,
        points_used=n_used,
        ratio_min=lo,
        ratio_max=hi,
        verdict="holds" if holds else "fails",
        cusp_like=cusp_like,
    )


def merge_certificates(
    certs: Sequence[Certificate], claim_id: Optional[str] = None
) -> Certificate:
    """Left-to-right min-margin reduction of certificates on one claim."""
    if not certs:
        raise ValueError("Nothing to merge.")
    claim = claim_id or certs[0].claim_id
    witness = None
    for cert in certs:
        if cert.witness is None:
            continue
        if witness is None or cert.witness.margin < witness.margin:
            witness = cert.witness
    holds = all(cert.holds for cert in certs)
    if not holds:
        failing = [c.witness for c in certs if not c.holds and c.witness is not None]
        witness = min(failing, key=lambda w: w.margin)
    return Certificate(
        claim_id=claim,
        verdict="holds" if holds else "fails",
        witness=witness,
        sample_count=sum(cert.sample_count for cert in certs),
        details={"merged": [cert.claim_id for cert in certs]},
    )


def expect_failure(cert: Certificate, claim_id: str) -> Certificate:
    """Certificate for the claim that ``cert`` is refuted by some sample."""
    details: Dict[str, Any] = {"refutes": cert.claim_id, **cert.details}
    if not cert.holds:
        assert cert.witness is not None
        witness = cert.witness.model_copy(update={"margin": -cert.witness.margin})
        return Certificate(
            claim_id=claim_id,
            verdict="holds",
            witness=witness,
            sample_count=cert.sample_count,
            details=details,
        )
    if cert.witness is None:
        witness = Witness(
            position=(0.0, 0.0), kappa1=0.0, kappa2=0.0, margin=-settings.EPS_CERT
        )
    else:
        m = cert.witness.margin
        witness = cert.witness.model_copy(
            update={"margin": -abs(m) if m != 0.0 else -settings.EPS_CERT}
        )
    log.warning(f"Expected '{cert.claim_id}' to be refuted, but it holds.")
    return Certificate(
        claim_id=claim_id,
        verdict="fails",
        witness=witness,
        sample_count=cert.sample_count,
        details=details,
    )


def positions(
    xs: ArrayLike,
    ys: ArrayLike,
    first: Optional[ArrayLike] = None,
    second: Optional[ArrayLike] = None,
) -> CurvatureSamples:
    """Sample container for certificates over plain point sets.

    ``first`` and ``second`` land in the witness kappa1/kappa2 slots.
    """
    xs = np.ravel(np.asarray(xs, dtype=float))
    zeros = np.zeros_like(xs)

    def spread(values: Optional[ArrayLike]) -> np.ndarray:
        if values is None:
            return zeros
        return np.ravel(np.broadcast_to(np.asarray(values, dtype=float), xs.shape))

    ys = spread(ys)
    a = spread(first)
    b = spread(second)
    return CurvatureSamples(x=xs, y=ys, H=zeros, K=zeros, kappa1=a, kappa2=b)
