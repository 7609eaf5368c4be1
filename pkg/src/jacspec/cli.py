"""Batch front door: TOML config in, JSON report / CSV spectra out.

Subcommands: build (dump leading blocks), criteria, index, spectrum, and
report (all of the above).  Exit codes: 0 success, 2 config error, 3 numeric
failure with a partial report still written.  JACSPEC_THREADS caps the
worker pool used to fan out independent criteria.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from . import __version__, criteria, indices, spectra
from .criteria import CriteriaOptions
from .errors import ConfigError, JacspecError
from .generators import (
    BlockSequence,
    ConstantBlocks,
    DiagonalBlocks,
    FAMILY_NAMES,
    InteractionModel,
    PerturbationData,
    ScaledIdentityBlocks,
    SplitBlocks,
    ZeroBlocks,
    make_family,
    make_general,
)
from .jacobi import BlockJacobiMatrix
from .sequences import Explicit, ScalarSequence, make_sequence

CRITERION_DISPATCH = (
    "carleman",
    "thm2.2-a1a2",
    "cor2.4-power-mean",
    "thm3.2-resolvent",
    "thm3.3-weighted",
    "thm5.2-max-alpha",
    "thm5.8-max-beta",
    "thm4.2-perturbation",
    "thm6.3-perturbed-alpha",
    "dennis-wall",
    "kosmir",
    "berezansky",
    "schrodinger-suite",
    "dirac-suite",
)

# base family each hatted/simplified family is compared against by the
# pair criterion
_PAIR_BASE = {
    "perturbed-alpha": "dirac-alpha",
    "perturbed-beta": "dirac-beta",
    "dirac-alpha-simple": "dirac-alpha",
    "dirac-beta-simple": "dirac-beta",
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["tool", "config", "criteria", "index", "spectrum", "errors", "wall_time_s"],
    "properties": {
        "tool": {
            "type": "object",
            "required": ["name", "version"],
            "properties": {"name": {"type": "string"}, "version": {"type": "string"}},
        },
        "config": {"type": "object"},
        "criteria": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["criterion_id", "verdict", "implied_property",
                             "evidence", "citations"],
                "properties": {
                    "criterion_id": {"type": "string"},
                    "verdict": {"enum": ["Satisfied", "Violated", "Inconclusive"]},
                    "implied_property": {"type": "string"},
                    "evidence": {"type": "object",
                                 "additionalProperties": {"type": "number"}},
                    "citations": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "index": {
            "type": ["object", "null"],
            "properties": {
                "n_plus": {"type": "integer", "minimum": 0},
                "n_minus": {"type": "integer", "minimum": 0},
                "stabilized": {"type": "boolean"},
                "z_points": {"type": "array", "items": {"type": "string"}},
                "ladder": {"type": "array"},
            },
        },
        "spectrum": {"type": ["object", "null"]},
        "errors": {"type": "array"},
        "wall_time_s": {"type": "number"},
    },
}


@dataclass
class RunConfig:
    family: str
    p: int = 1
    p1: int = 0
    c: float = 1.0
    d: ScalarSequence | None = None
    alpha: BlockSequence | None = None
    beta: BlockSequence | None = None
    pert: PerturbationData | None = None
    a_seq: ScalarSequence | None = None     # scalar general family
    b_seq: ScalarSequence | None = None
    n_max: int = 4096
    dense_cap: int = 8192
    margin: float = 1e-6
    criteria_which: list = field(default_factory=list)
    z_points: list = field(default_factory=lambda: [1j, -1j, 1 + 1j])
    ladder_max: int = 4096
    index_tol: float = 1e-8
    spectrum_N: int = 0
    report_path: str | None = None
    csv_path: str | None = None
    echo: dict = field(default_factory=dict)


def _parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    if t in ("j", "+j"):
        return 1j
    if t == "-j":
        return -1j
    t = t.replace("+j", "+1j").replace("-j", "-1j")
    try:
        return complex(t)
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {text!r}") from exc


def _sequence_from_table(tab: dict, where: str) -> ScalarSequence:
    if "kind" not in tab:
        raise ConfigError(f"[{where}] needs a 'kind'")
    kind = tab["kind"]
    params = {k: v for k, v in tab.items() if k != "kind"}
    try:
        if kind == "explicit" and "values" in params:
            return Explicit.from_values(params["values"])
        if kind == "product-weighted":
            base = _sequence_from_table(params.pop("base"), where + ".base")
            factor = params.pop("factor_log")
            return make_sequence("product-weighted", base=base, factor_log=factor)
        return make_sequence(kind, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def _blocks_from_table(tab: dict, p: int, where: str) -> BlockSequence:
    if "kind" not in tab:
        raise ConfigError(f"[{where}] needs a 'kind'")
    kind = tab["kind"]
    if kind == "zero":
        return ZeroBlocks(p)
    if kind == "constant-scalar":
        return ScaledIdentityBlocks(p, make_sequence("power", exponent=0.0, scale=float(tab["value"])))
    if kind == "constant-matrix":
        return ConstantBlocks(np.asarray(tab["matrix"], dtype=np.complex128))
    if kind == "scaled-identity":
        return ScaledIdentityBlocks(p, _sequence_from_table(tab["seq"], where + ".seq"))
    if kind == "diagonal-list":
        slots = [_sequence_from_table(t, f"{where}.slots[{i}]") for i, t in enumerate(tab["slots"])]
        if len(slots) != p:
            raise ConfigError(f"[{where}] has {len(slots)} slots, p = {p}")
        return DiagonalBlocks(slots)
    if kind == "block-split":
        p1 = int(tab["p1"])
        upper = _blocks_from_table(tab["upper"], p1, where + ".upper")
        lower = _blocks_from_table(tab["lower"], p - p1, where + ".lower")
        return SplitBlocks(upper, lower)
    raise ConfigError(f"[{where}] unknown block kind {kind!r}")


def parse_config(text: str) -> RunConfig:
    """Validate a TOML run description into a RunConfig."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    run = raw.get("run", {})
    family = run.get("family")
    if family not in FAMILY_NAMES:
        raise ConfigError(f"[run] family must be one of {FAMILY_NAMES}, got {family!r}")
    cfg = RunConfig(family=family, echo=raw)
    cfg.p = int(run.get("p", 1))
    cfg.p1 = int(run.get("p1", 0))
    cfg.c = float(run.get("c", 1.0))
    cfg.n_max = int(run.get("n_max", 4096))
    cfg.dense_cap = int(run.get("dense_cap", 8192))
    cfg.margin = float(run.get("margin", 1e-6))
    if cfg.p < 1:
        raise ConfigError("[run] p must be >= 1")
    if cfg.c <= 0:
        raise ConfigError("[run] c must be positive")

    if family == "dyukarev":
        if not (0 <= cfg.p1 <= cfg.p):
            raise ConfigError("[run] need 0 <= p1 <= p for dyukarev")
    elif family == "general":
        for key in ("a", "b"):
            if key not in raw:
                raise ConfigError(f"general family needs a [{key}] sequence table")
        cfg.a_seq = _sequence_from_table(raw["a"], "a")
        cfg.b_seq = _sequence_from_table(raw["b"], "b")
        if cfg.p != 1:
            raise ConfigError("config-driven general family is scalar (p = 1)")
    else:
        if "d" not in raw:
            raise ConfigError(f"family {family!r} needs a [d] sequence table")
        cfg.d = _sequence_from_table(raw["d"], "d")
        needs_alpha = family in ("dirac-alpha", "dirac-alpha-simple", "boundary-alpha",
                                 "perturbed-alpha", "schrodinger-j1", "schrodinger-j2")
        needs_beta = family in ("dirac-beta", "dirac-beta-simple", "perturbed-beta")
        if needs_alpha:
            if "alpha" not in raw:
                raise ConfigError(f"family {family!r} needs an [alpha] table")
            cfg.alpha = _blocks_from_table(raw["alpha"], cfg.p, "alpha")
        if needs_beta:
            if "beta" not in raw:
                raise ConfigError(f"family {family!r} needs a [beta] table")
            cfg.beta = _blocks_from_table(raw["beta"], cfg.p, "beta")
        if family.startswith("perturbed"):
            pt = raw.get("perturbation", {})
            ap = _blocks_from_table(pt["aprime"], cfg.p, "perturbation.aprime") if "aprime" in pt else ZeroBlocks(cfg.p)
            bp = _blocks_from_table(pt["bprime"], cfg.p, "perturbation.bprime") if "bprime" in pt else ZeroBlocks(cfg.p)
            cfg.pert = PerturbationData(Aprime=ap, Bprime=bp)

    crit = raw.get("criteria", {})
    cfg.criteria_which = list(crit.get("which", []))
    for cid in cfg.criteria_which:
        if cid not in CRITERION_DISPATCH:
            raise ConfigError(f"[criteria] unknown criterion id {cid!r}")

    idx = raw.get("index", {})
    if "z_points" in idx:
        cfg.z_points = [_parse_complex(z) for z in idx["z_points"]]
    cfg.ladder_max = int(idx.get("ladder_max", 4096))
    cfg.index_tol = float(idx.get("tol", 1e-8))

    spec = raw.get("spectrum", {})
    cfg.spectrum_N = int(spec.get("N", 0))

    out = raw.get("output", {})
    cfg.report_path = out.get("report")
    cfg.csv_path = out.get("csv")
    return cfg


def build_model(cfg: RunConfig) -> InteractionModel | None:
    if cfg.family in ("dyukarev", "general"):
        return None
    return InteractionModel(p=cfg.p, c=cfg.c, d=cfg.d, alpha=cfg.alpha, beta=cfg.beta)


def build_matrix(cfg: RunConfig) -> BlockJacobiMatrix:
    if cfg.family == "general":
        a, b = cfg.a_seq, cfg.b_seq

        def diag(n):
            return np.array([[a.eval(n + 1)]], dtype=np.complex128)

        def offdiag(n):
            return np.array([[b.eval(n + 1)]], dtype=np.complex128)

        return make_general(1, diag, offdiag, name="general")
    return make_family(cfg.family, build_model(cfg), pert=cfg.pert, p=cfg.p, p1=cfg.p1)


def _run_one_criterion(cid: str, cfg: RunConfig, J: BlockJacobiMatrix,
                       model: InteractionModel | None, opts: CriteriaOptions) -> list:
    if cid == "carleman":
        return [criteria.carleman(J, opts)]
    if cid == "thm2.2-a1a2":
        return [criteria.selfadjoint_a1a2(J, opts)]
    if cid == "cor2.4-power-mean":
        return [criteria.selfadjoint_power_mean(J, opts)]
    if cid == "thm3.2-resolvent":
        return [criteria.discrete_resolvent(J, opts)]
    if cid == "thm3.3-weighted":
        return [criteria.discrete_weighted(J, opts)]
    if cid == "kosmir":
        return [criteria.kosmir_test(J, opts)]
    if cid == "berezansky":
        return [criteria.berezansky_test(J, opts)]
    if cid == "thm4.2-perturbation":
        base_name = _PAIR_BASE.get(cfg.family)
        if base_name is None or model is None:
            raise ConfigError(
                "the pair criterion needs a hatted or simplified family "
                f"({sorted(_PAIR_BASE)}), got {cfg.family!r}")
        base = make_family(base_name, model)
        return [criteria.perturbation_equivalence(base, J, opts)]
    if model is None:
        raise ConfigError(f"criterion {cid!r} needs an interaction model")
    if cid == "thm5.2-max-alpha":
        return [criteria.max_index_alpha(model, opts)]
    if cid == "thm5.8-max-beta":
        return [criteria.max_index_beta(model, opts)]
    if cid == "thm6.3-perturbed-alpha":
        return [criteria.perturbation_alpha_conditions(model, cfg.pert, opts)]
    if cid == "dennis-wall":
        return [criteria.dennis_wall(model, opts)]
    if cid == "schrodinger-suite":
        return criteria.schrodinger_criteria(model, opts)
    if cid == "dirac-suite":
        return criteria.dirac_criteria(model, opts)
    raise ConfigError(f"unknown criterion id {cid!r}")


def _default_criteria(cfg: RunConfig) -> list:
    if cfg.criteria_which:
        return cfg.criteria_which
    base = ["carleman", "thm2.2-a1a2", "cor2.4-power-mean", "thm3.3-weighted",
            "kosmir", "berezansky"]
    if cfg.alpha is not None:
        base += ["thm5.2-max-alpha", "dirac-suite"]
    if cfg.beta is not None:
        base += ["thm5.8-max-beta"]
    return base


def _pool_size(n_tasks: int) -> int:
    cap = os.environ.get("JACSPEC_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_tasks, limit))


def run(cfg: RunConfig, stages: tuple = ("criteria", "index", "spectrum")) -> dict:
    """Execute the requested stages; deterministic for a fixed config."""
    t0 = time.monotonic()
    report: dict = {
        "tool": {"name": "jacspec", "version": __version__},
        "config": cfg.echo,
        "criteria": [],
        "index": None,
        "spectrum": None,
        "errors": [],
    }
    J = build_matrix(cfg)
    model = build_model(cfg)
    opts = CriteriaOptions(n_max=cfg.n_max, margin=cfg.margin)

    if "criteria" in stages:
        which = _default_criteria(cfg)
        results: dict = {}

        def work(cid):
            try:
                return cid, _run_one_criterion(cid, cfg, J, model, opts)
            except JacspecError as exc:
                return cid, exc

        with ThreadPoolExecutor(max_workers=_pool_size(len(which))) as pool:
            for cid, out in pool.map(work, which):
                results[cid] = out
        for cid in which:  # deterministic order
            out = results[cid]
            if isinstance(out, Exception):
                report["errors"].append({"stage": f"criteria:{cid}", "error": str(out)})
            else:
                report["criteria"].extend(r.to_dict() for r in out)

    if "index" in stages:
        try:
            est = indices.estimate_index(J, cfg.z_points, cfg.ladder_max, cfg.index_tol)
            report["index"] = {
                "n_plus": est.n_plus,
                "n_minus": est.n_minus,
                "stabilized": est.stabilized,
                "z_points": [str(z) for z in est.z_points],
                "ladder": [
                    {"z": str(r["z"]), "N": r["N"], "log10_eigs": r["log10_eigs"]}
                    for r in est.ladder
                ],
            }
        except JacspecError as exc:
            report["errors"].append({"stage": "index", "error": str(exc)})

    if "spectrum" in stages and cfg.spectrum_N > 0:
        try:
            sl = spectra.truncation_spectrum(J, cfg.spectrum_N, cap=cfg.dense_cap)
            report["spectrum"] = {
                "N": sl.N,
                "p": sl.p,
                "eigenvalues": [float(v) for v in sl.eigenvalues],
            }
            if cfg.csv_path:
                spectra.write_csv(sl, cfg.csv_path)
        except JacspecError as exc:
            report["errors"].append({"stage": "spectrum", "error": str(exc)})

    report["wall_time_s"] = round(time.monotonic() - t0, 6)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, complex):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _dump_blocks(cfg: RunConfig, count: int) -> dict:
    J = build_matrix(cfg)
    out = {"family": cfg.family, "p": J.p, "blocks": []}
    for n in range(count):
        d, ds = J.diag_scaled(n)
        b, bs = J.offdiag_scaled(n)
        out["blocks"].append({
            "n": n,
            "diag": [[str(x) for x in row] for row in d.tolist()],
            "diag_log_scale": ds,
            "offdiag": [[str(x) for x in row] for row in b.tolist()],
            "offdiag_log_scale": bs,
        })
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="jacspec",
                                     description="block Jacobi family diagnostics")
    parser.add_argument("subcommand",
                        choices=["build", "criteria", "index", "spectrum", "report"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--n-max", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--json", dest="json_path", default=None)
    parser.add_argument("--csv", dest="csv_path", default=None)
    parser.add_argument("--blocks", type=int, default=8, help="blocks dumped by 'build'")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "rb") as fh:
            cfg = parse_config(fh.read().decode("utf-8"))
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.n_max is not None:
        cfg.n_max = args.n_max
    if args.tol is not None:
        cfg.index_tol = args.tol
    if args.csv_path is not None:
        cfg.csv_path = args.csv_path
    if args.json_path is not None:
        cfg.report_path = args.json_path

    stage_map = {
        "criteria": ("criteria",),
        "index": ("index",),
        "spectrum": ("spectrum",),
        "report": ("criteria", "index", "spectrum"),
    }

    try:
        if args.subcommand == "build":
            payload = _dump_blocks(cfg, args.blocks)
            text = json.dumps(payload, sort_keys=True, indent=2)
            report = payload
        else:
            report = run(cfg, stage_map[args.subcommand])
            text = report_json(report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except JacspecError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3

    if cfg.report_path:
        with open(cfg.report_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)

    if isinstance(report, dict) and report.get("errors"):
        for err in report["errors"]:
            print(f"stage {err['stage']} failed: {err['error']}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
