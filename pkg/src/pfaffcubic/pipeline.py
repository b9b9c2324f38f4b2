"""End-to-end construction: cubic surface in, certified skew matrices out."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import mpmath
from mpmath import mp

from . import numerics
from .cubic_io import complex_pair, cubic_to_json, matrix_from_json, matrix_to_json, render, to_poly
from .errors import InputError, PfaffError, RepresentationFailed, RotationExhausted, SchemaError
from .multipoly import LinearChange
from .quaternary import (
    CanonicalQuaternary,
    D11,
    PfaffianRep,
    block_representation,
    build_M0,
    compute_d11,
    embed_and_shear,
    normalize_sign,
    pull_back,
    quadric_to_pfaffian_pair,
    rotate_until_irreducible,
    split_plane,
)
from .ternary import CanonLabel, CanonicalTernary, analyse, slice_y0, weierstrass_reduce
from .verifier import Certificate, LinearMatrix, certify

BRANCHES = ("irreducible", "rotated", "plane_split")
DEVIATIONS = {
    "irreducible": None,
    "rotated": "section made irreducible by a random integer change of coordinates",
    "plane_split": "hyperplane factor split off; block-diagonal matrix",
}


@dataclass(frozen=True)
class Options:
    precision_bits: int = numerics.DEFAULT_PRECISION
    cert_eps: float | str | None = None
    seed: int = 0
    d11_branch: str = "plus"
    max_rotations: int = 20
    n_samples: int = 16
    escalate: bool = True


@dataclass
class PipelineResult:
    rep: PfaffianRep
    certificate: Certificate
    classification: dict
    transforms: dict
    precision_bits: int
    seed: int
    cubic: object
    canonical: CanonicalQuaternary | None = None
    d11: D11 | None = None
    timings: dict = field(default_factory=dict)

    @property
    def branch(self) -> str:
        return self.rep.branch

    def to_json(self, timings: bool = False) -> dict:
        with mp.workprec(self.precision_bits):
            out = {
                "cubic": render(self.cubic),
                "theta": cubic_to_json(self.cubic)["theta"],
                "precision_bits": self.precision_bits,
                "seed": self.seed,
                "branch": self.branch,
                "deviation": DEVIATIONS[self.branch],
                "matrices": [matrix_to_json(m) for m in self.rep.A],
                "transforms": self.transforms,
                "classification": self.classification,
                "certificate": self.certificate.to_json(),
            }
            if self.canonical is not None:
                out["lambda"] = {str(k): complex_pair(v) for k, v in sorted(self.canonical.lam.items())}
            if self.d11 is not None:
                out["d11"] = {"value": complex_pair(self.d11.value), "branch": self.d11.branch}
        if timings:
            out["timings_ms"] = {k: round(v * 1000, 3) for k, v in self.timings.items()}
        return out


class _Clock:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self.stage = "start"
        self._t = time.perf_counter()

    def enter(self, stage: str):
        now = time.perf_counter()
        self.timings[self.stage] = self.timings.get(self.stage, 0.0) + now - self._t
        self.stage = stage
        self._t = now

    def close(self) -> dict:
        self.enter("done")
        self.timings.pop("start", None)
        self.timings.pop("done", None)
        return self.timings


def _mat(change: LinearChange) -> list:
    return matrix_to_json(change.matrix)


def _label_json(label: CanonLabel | None):
    return label.to_json() if label is not None else None


def _canonical_branch(c, ct: CanonicalTernary, pre: LinearChange | None, options: Options,
                      clock: _Clock, branch: str):
    clock.enter("embed_and_shear")
    cq = embed_and_shear(c, ct, pre)
    clock.enter("build")
    d = compute_d11(cq[18], options.d11_branch)
    rep = build_M0(cq, d)
    clock.enter("normalize_sign")
    rep = normalize_sign(rep, cq.form())
    clock.enter("pull_back")
    rep = pull_back(rep, cq.transform)
    rep = PfaffianRep(rep.matrices, branch, None, rep.pf_sign)
    transforms = {
        "ternary": _mat(ct.transform),
        "embed": _mat(cq.embed),
        "shear_beta": complex_pair(cq.beta),
        "rotation": _mat(pre) if pre is not None else None,
        "total": _mat(cq.transform),
    }
    return rep, cq, d, transforms


def _split_branch(c, clock: _Clock):
    clock.enter("split_plane")
    ell, q = split_plane(c)
    clock.enter("quadric_pair")
    pair = quadric_to_pfaffian_pair(q)
    clock.enter("build")
    rep = block_representation(ell, *pair)
    clock.enter("normalize_sign")
    rep = normalize_sign(rep, to_poly(c))
    transforms = {
        "plane": [complex_pair(v) for v in ell],
        "quadric_pair": [[complex_pair(v) for v in form] for form in pair],
    }
    return rep, transforms


def _run(c, options: Options, bits: int) -> PipelineResult:
    clock = _Clock()
    try:
        clock.enter("slice")
        s = slice_y0(c)
        clock.enter("slice_analysis")
        analysis = analyse(s)
        classification = {"slice": _label_json(analysis.label), "surface_reducible": False}
        cq = d = None
        if analysis.canonical is not None:
            rep, cq, d, transforms = _canonical_branch(
                c, analysis.canonical, None, options, clock, "irreducible"
            )
        else:
            try:
                rep = None
                if not s.is_zero():
                    clock.enter("rotate")
                    g, rot = rotate_until_irreducible(c, options.seed, options.max_rotations)
                    clock.enter("weierstrass_reduce")
                    ct = weierstrass_reduce(slice_y0(g))
                    classification["rotated_slice"] = _label_json(ct.label)
                    rep, cq, d, transforms = _canonical_branch(g, ct, rot, options, clock, "rotated")
            except RotationExhausted:
                rep = None
            if rep is None:
                rep, transforms = _split_branch(c, clock)
                classification["surface_reducible"] = True
        if analysis.lines:
            classification["slice_lines"] = [[complex_pair(v) for v in ln] for ln in analysis.lines]
        clock.enter("certify")
        cert = certify(rep.matrices, c, n_samples=options.n_samples, seed=options.seed)
    except RepresentationFailed:
        raise
    except InputError:
        raise
    except PfaffError as exc:
        raise RepresentationFailed(
            f"{type(exc).__name__} during {clock.stage}: {exc}", clock.stage,
            {"precision_bits": bits, "error": type(exc).__name__},
        ) from exc
    timings = clock.close()
    if not cert.passed:
        raise RepresentationFailed(
            "certificate failed", "certify",
            {"precision_bits": bits, **cert.to_json()},
        )
    rep = PfaffianRep(rep.matrices, rep.branch, cert, rep.pf_sign)
    return PipelineResult(rep, cert, classification, transforms, bits, options.seed, c,
                          cq, d, timings)


def represent(c, options: Options | None = None) -> PipelineResult:
    """Certified Pfaffian representation of a cubic surface.

    Runs once at ``options.precision_bits``; on failure reruns once at twice
    the precision before giving up with :class:`RepresentationFailed`.
    """
    options = options or Options()
    bits = options.precision_bits
    attempts = [bits, 2 * bits] if options.escalate else [bits]
    failures = []
    for b in attempts:
        with numerics.working_precision(b, options.cert_eps):
            try:
                return _run(c, options, b)
            except RepresentationFailed as exc:
                failures.append(exc)
    last = failures[-1]
    raise RepresentationFailed(
        f"{last} (after {len(failures)} attempt(s), precision {attempts[-1]} bits)",
        last.stage,
        {"attempts": [dict(f.diagnostics) for f in failures]},
    )


def matrices_from_json(data) -> LinearMatrix:
    """Accept a bare 4x6x6 list of [re, im] pairs or an object with a "matrices" key."""
    if isinstance(data, dict):
        if "matrices" not in data:
            raise SchemaError('missing "matrices"')
        data = data["matrices"]
    if not isinstance(data, list) or len(data) != 4:
        raise SchemaError("matrices must be a list of four 6x6 matrices")
    mats = tuple(matrix_from_json(m, 6, 6, f"matrices[{k}]") for k, m in enumerate(data))
    lm = LinearMatrix(mats)
    lm.check_skew()
    return lm


def verify_file(matrices, cubic, n_samples: int = 16, seed: int = 0) -> Certificate:
    """Certify matrices (JSON data) against a cubic surface."""
    lm = matrices if isinstance(matrices, LinearMatrix) else matrices_from_json(matrices)
    return certify(lm, cubic, n_samples=n_samples, seed=seed)


def canon_report(c) -> dict:
    """Analysis of the y = 0 section alone."""
    s = slice_y0(c)
    out: dict = {"slice": s.render(("x", "z", "t")) if not s.is_zero() else "0"}
    if s.is_zero():
        out["label"] = None
        out["lines"] = []
        return out
    analysis = analyse(s)
    out["label"] = _label_json(analysis.label)
    out["lines"] = [[complex_pair(v) for v in ln] for ln in analysis.lines]
    if analysis.canonical is not None:
        ct = analysis.canonical
        out["lambda"] = {"3": complex_pair(ct.lam3), "7": complex_pair(ct.lam7),
                         "8": complex_pair(ct.lam8)}
        out["transform"] = _mat(ct.transform)
        out["flex"] = [complex_pair(v) for v in ct.flex]
        out["residual"] = float(ct.residual)
    return out
