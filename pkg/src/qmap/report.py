"""The diagnostic battery behind ``qmap analyze``."""
from __future__ import annotations

import hashlib
from typing import Optional

import numpy as np

from . import __version__
from .builders import affine_from_channel, bloch_from_channel, fujiwara_algoet
from .channel import (
    Channel,
    NotCompletelyPositive,
    choi_spectrum,
    entropy,
    is_bistochastic,
    is_hermiticity_preserving,
    is_trace_preserving,
    is_unital,
    kraus_rank,
    norm2,
    psd_threshold,
    superop_spectrum,
    trace_defect,
    trace_norm,
    unital_defect,
)
from .duality import classical_classes, classical_shadow, diagram_commutes, state_from_map
from .positivity import (
    ccp_value,
    choi_map_decomposable,
    choi_map_positive,
    cp_value,
    decompose,
    neg_rank,
    positivity_value,
    spa,
)

REPORT_FORMAT = "qmap-report"
DEFAULT_TOL = 1e-10
DEFAULT_RESTARTS = 64


def _complex_list(z) -> list:
    return [[float(v.real), float(v.imag)] for v in np.asarray(z, dtype=complex).ravel()]


def _matrix(M) -> Optional[list]:
    if M is None:
        return None
    M = np.asarray(M)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M.astype(complex)]


def analyze(ch: Channel, doc: Optional[dict] = None, raw: bytes = b"", source_name: str = "",
            deep: bool = False, tol: float = DEFAULT_TOL, seed: int = 0,
            restarts: int = DEFAULT_RESTARTS) -> dict:
    """Run every diagnostic on ``ch`` and return a JSON-ready dict."""
    n = ch.dim
    hp = is_hermiticity_preserving(ch, tol)
    tp = is_trace_preserving(ch, tol)
    unital = is_unital(ch, tol)
    rep: dict = {
        "format": REPORT_FORMAT,
        "version": 1,
        "tool": {"name": "qmap", "version": __version__},
        "seed": int(seed),
        "tolerances": {"flags": tol, "psd_rel": 1e-9, "optimizer": 1e-12, "line_test": 1e-10},
        "input": {
            "source": source_name,
            "sha256": hashlib.sha256(raw).hexdigest() if raw else None,
            "dim": n,
            "repr_type": (doc or {}).get("repr", {}).get("type"),
            "provenance": ch.provenance,
        },
    }

    cp = ccp = None
    is_cp = False
    if hp:
        cp, ccp = cp_value(ch), ccp_value(ch)
        thr = psd_threshold(ch.choi)
        is_cp, is_ccp = cp >= -thr, ccp >= -thr
    rep["flags"] = {
        "hermiticity_preserving": hp,
        "trace_preserving": tp,
        "unital": unital,
        "bistochastic": is_bistochastic(ch, tol),
        "completely_positive": bool(is_cp) if hp else None,
        "completely_copositive": bool(is_ccp) if hp else None,
        "complex_choi_spectrum": not hp,
    }
    rep["defects"] = {"trace": trace_defect(ch), "unital": unital_defect(ch)}

    if hp:
        spec = choi_spectrum(ch)
        rep["choi_spectrum"] = spec.tolist()
        rep["choi_spectrum_complex"] = None
    else:
        z = np.linalg.eigvals(ch.choi)
        z = z[np.lexsort((-z.imag, -z.real))]
        rep["choi_spectrum"] = None
        rep["choi_spectrum_complex"] = _complex_list(z)

    if hp and is_cp:
        rep["kraus_rank"] = kraus_rank(ch)
        rep["d_prime"] = (np.clip(spec, 0, None) / n).tolist()
        try:
            rep["entropy"] = entropy(ch)
        except NotCompletelyPositive:
            rep["entropy"] = None
    else:
        rep["kraus_rank"] = None
        rep["d_prime"] = None
        rep["entropy"] = None

    rep["norms"] = {"hs": norm2(ch), "trace": trace_norm(ch)}

    ss = superop_spectrum(ch)
    rep["superoperator"] = {
        "eigenvalues": _complex_list(ss.eigenvalues),
        "spectral_gap": ss.spectral_gap,
        "unit_multiplicity": ss.unit_multiplicity,
        "invariant_state": _matrix(ss.invariant_state),
    }

    pos: dict = {"cp": cp, "ccp": ccp, "neg_rank": neg_rank(ch) if hp else None, "p": None}
    rep["decomposability"] = None
    if hp and deep and n >= 2:
        pv = positivity_value(ch, restarts=restarts, seed=seed)
        pos["p"] = {
            "value": pv.value,
            "label": "best-found",
            "block_positive_numeric": pv.value >= -1e-9,
            "restarts": pv.restarts,
            "converged": pv.converged,
            "sweeps": pv.sweeps,
            "polished": pv.polished,
            "x": _complex_list(pv.x),
            "y": _complex_list(pv.y),
        }
        lt = decompose(ch)
        rep["decomposability"] = {
            "verdict": lt.verdict,
            "method": lt.method,
            "a": lt.a,
            "beta_star": lt.beta_star,
            "interval": list(lt.interval) if lt.interval else None,
            "degenerate_line": lt.degenerate_line,
            "beta_bound": lt.beta_bound,
        }
    rep["positivity"] = pos

    if hp:
        s = spa(ch)
        rep["spa"] = {"noop": s.noop, "weight": s.weight,
                      "min_choi_eigenvalue": cp_value(s.channel)}
    else:
        rep["spa"] = None

    rep["choi_map"] = None
    r = (doc or {}).get("repr", {})
    if r.get("type") == "choi_map":
        a, b, c = (float(r[k]) for k in "abc")
        rep["choi_map"] = {"a": a, "b": b, "c": c, "positive": choi_map_positive(a, b, c),
                           "decomposable": choi_map_decomposable(a, b, c)}

    rep["bloch"] = _bloch_section(ch, tol) if n == 2 and hp else None

    js = state_from_map(ch)
    rep["jamiolkowski"] = js.diagnostics() if hp else {
        "trace": float(np.real(np.trace(js.rho))), "purity": None, "entropy": None,
        "pt_min_eig": None, "ppt": None, "ppt_note": None}

    sh = classical_shadow(ch)
    real = not np.iscomplexobj(sh.transition)
    classes = classical_classes(sh.transition, tol) if real else None
    rep["classical"] = {
        "transition": sh.transition.tolist() if real else _matrix(sh.transition),
        "prob_vector": sh.prob_vector.tolist() if not np.iscomplexobj(sh.prob_vector)
        else _complex_list(sh.prob_vector),
        "diagram_commutes": diagram_commutes(ch),
        "classes": None if classes is None else {
            "stochastic": classes.stochastic,
            "bistochastic": classes.bistochastic,
            "symmetric": classes.symmetric,
            "permutation": classes.permutation,
            "orthostochastic": classes.orthostochastic,
            "unistochastic": classes.unistochastic,
            "heuristic": classes.heuristic,
        },
    }
    return rep


def _bloch_section(ch: Channel, tol: float) -> dict:
    t, kappa = affine_from_channel(ch, tol)
    b = bloch_from_channel(ch, tol)
    out = {"t": t.tolist(), "eta": b.eta.tolist(), "kappa": b.kappa.tolist(),
           "rotated": b.rotations is not None, "fujiwara_algoet": None}
    if np.max(np.abs(b.kappa)) <= tol:
        out["fujiwara_algoet"] = fujiwara_algoet(b.eta)
    return out
