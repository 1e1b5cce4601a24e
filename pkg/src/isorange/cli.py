"""Command-line entry point.

Data files are CSV with header ``z,y[,weight]``.  Numeric ``z`` gives a total
order by sorting; any other ids need ``--poset``, a text file of ``a < b``
lines.  Numbers are read as exact fractions, so decimal input stays exact.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import IsorangeError, LatticeCapError
from .functionals import Family, FunctionalSpec, SolverHint, WeightedSample
from .oracle import OracleLattice, verify_simultaneous_optimality
from .poset import Poset, all_min_max_bounds, bands, level_partition, poset_fit, refine_band, upper_sets
from .scores import murphy_curve
from .total_order import Pooling, Side, minmax_fit, pav, solution_band
from .unimodal import dominance_matrix, unimodal_fits

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_REFUTED = 2


@dataclass
class RunConfig:
    command: str
    input: Path | None
    poset: Path | None
    spec: FunctionalSpec | None
    side: Side
    fmt: str
    oracle: bool
    seed: int | None


# parsing ------------------------------------------------------------------


def parse_number(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def read_data(path: Path, string_ids: bool) -> WeightedSample:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty data file")
    header = [c.strip().lower() for c in rows[0]]
    if header[:2] != ["z", "y"] or len(header) > 3 or (len(header) == 3 and header[2] != "weight"):
        raise ValueError(f"{path}: header must be z,y[,weight]")
    obs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
        z = row[0].strip()
        if not string_ids:
            try:
                z = Fraction(z)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: covariate {z!r} is not numeric; pass --poset for named ids") from None
            z = _plain(z)
        y = parse_number(row[1])
        w = parse_number(row[2]) if len(row) == 3 else 1
        obs.append((z, y, w))
    covs = tuple(sorted({z for z, _, _ in obs})) if not string_ids else tuple(dict.fromkeys(z for z, _, _ in obs))
    return WeightedSample(covs, tuple(obs))


def read_poset(path: Path, sample: WeightedSample) -> Poset:
    edges = []
    extra = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("<")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ValueError(f"{path}:{lineno}: expected 'a < b'")
            a, b = parts[0].strip(), parts[1].strip()
            edges.append((a, b))
            extra.extend(x for x in (a, b) if x not in sample.covariates)
    if extra:
        raise ValueError(f"{path}: ids {sorted(set(extra))} do not appear in the data")
    return Poset.from_edges(sample.covariates, edges)


def read_ratio_table(path: Path):
    u, w = {}, {}
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if [c.strip().lower() for c in rows[0]] != ["y", "u", "w"]:
        raise ValueError(f"{path}: header must be y,u,w")
    for row in rows[1:]:
        y = parse_number(row[0])
        u[y] = parse_number(row[1])
        w[y] = parse_number(row[2])
    return u, w


def build_spec(args) -> FunctionalSpec:
    fam = Family(args.functional)
    kw = {}
    if args.solver:
        kw["solver_hint"] = SolverHint(args.solver)
    if args.tolerance is not None:
        kw["tolerance"] = args.tolerance
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter

    def need(name):
        val = getattr(args, name)
        if val is None:
            raise ValueError(f"--{name} is required for {fam.value}")
        return parse_number(val)

    if fam is Family.QUANTILE:
        return FunctionalSpec.quantile(need("alpha"), **kw)
    if fam is Family.EXPECTILE:
        return FunctionalSpec.expectile(need("tau"), **kw)
    if fam is Family.LP:
        return FunctionalSpec.lp(need("p"), **kw)
    if fam is Family.HUBER:
        return FunctionalSpec.huber(need("delta"), **kw)
    if fam is Family.RATIO:
        if not args.ratio_table:
            raise ValueError("--ratio-table is required for ratio")
        u, w = read_ratio_table(Path(args.ratio_table))
        return FunctionalSpec.ratio(u, w, **kw)
    return FunctionalSpec(fam, **kw)


# output -------------------------------------------------------------------


def _plain(v):
    """JSON-friendly number: ints stay ints, infinities become strings."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    if isinstance(v, (Fraction, float)):
        f = float(v)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return float(format(f, ".17g"))
    return v


def _plain_list(vals) -> list:
    return [_plain(v) for v in vals]


def _ids(ids) -> list:
    return [_plain(z) for z in ids]


def _sorted_ids(ids, order) -> list:
    pos = {z: k for k, z in enumerate(order)}
    return _ids(sorted(ids, key=pos.__getitem__))


def _fit_block(lower, upper) -> dict:
    out = {"lower": _plain_list(lower), "upper": _plain_list(upper)}
    if list(lower) == list(upper):
        out["values"] = _plain_list(lower)
    return out


def emit(cfg: RunConfig, payload: dict, table: list | None, out) -> None:
    if cfg.fmt == "csv" and table is not None:
        writer = csv.writer(out, lineterminator="\n")
        for row in table:
            writer.writerow([_csv_cell(c) for c in row])
    else:
        out.write(json.dumps(payload, indent=2) + "\n")


def _csv_cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def _oracle_block(spec, sample, order, fit) -> dict:
    rep = verify_simultaneous_optimality(spec, sample, order, fit, tol=_tol(spec))
    return {
        "verified": rep.verified,
        "failures": [
            {
                "eta": _plain(f.eta),
                "offered": _sorted_ids(f.offered, sample.covariates),
                "better": _sorted_ids(f.better, sample.covariates),
                "gap": _plain(f.gap),
            }
            for f in rep.failures
        ],
    }


def _tol(spec: FunctionalSpec):
    return 1e-7 if spec.solver_hint is SolverHint.BISECTION else 1e-9


# subcommands ---------------------------------------------------------------


def cmd_fit(cfg: RunConfig, args, out) -> int:
    sample = read_data(cfg.input, False)
    spec = cfg.spec
    sb = solution_band(spec, sample)
    lower = minmax_fit(spec, sample, Side.LOWER)
    upper = minmax_fit(spec, sample, Side.UPPER)
    res = pav(spec, sample, Pooling(args.pooling))
    covs = sample.covariates
    payload = {"functional": spec.describe(), "covariates": _ids(covs)}
    payload.update(_fit_block(lower.values, upper.values))
    payload["blocks"] = [_ids(b) for b in res.partition.label(covs)]
    payload["bands"] = [
        {
            "covariates": _ids(covs[b.start : b.stop]),
            "eta_lower": _plain(b.eta_lower),
            "eta_upper": _plain(b.eta_upper),
            "jumps": _ids(covs[l] for l in b.jumps),
        }
        for b in sb.bands
    ]
    if cfg.oracle:
        payload["oracle"] = {
            "lower": _oracle_block(spec, sample, None, lower),
            "upper": _oracle_block(spec, sample, None, upper),
        }
    table = [["z", "lower", "upper"]] + [[z, a, b] for z, a, b in zip(covs, lower.values, upper.values)]
    emit(cfg, payload, table, out)
    return EXIT_OK


def _order(cfg: RunConfig, sample_string_ids: bool):
    sample = read_data(cfg.input, sample_string_ids)
    if cfg.poset is not None:
        poset = read_poset(cfg.poset, sample)
    else:
        poset = Poset.chain(sample.covariates)
    return sample, poset


def cmd_fit_poset(cfg: RunConfig, args, out) -> int:
    sample, poset = _order(cfg, cfg.poset is not None)
    spec = cfg.spec
    lat = upper_sets(poset)
    lower = poset_fit(spec, sample, lat, Side.LOWER)
    upper = poset_fit(spec, sample, lat, Side.UPPER)
    bounds = all_min_max_bounds(spec, sample, lat)
    covs = poset.elements
    payload = {"functional": spec.describe(), "covariates": _ids(covs), "upper_sets": len(lat)}
    payload.update(_fit_block(lower.values, upper.values))
    payload["bounds"] = [[_plain(bounds[z].lower), _plain(bounds[z].upper)] for z in covs]
    refinements = []
    for lo, hi in bands(lower, upper, covs):
        ref = refine_band(spec, sample, lat, lower, upper, lo, hi)
        refinements.append(
            {
                "eta_lower": _plain(lo),
                "eta_upper": _plain(hi),
                "band": _sorted_ids(ref.band, covs),
                "outer": _sorted_ids(ref.outer, covs),
                "inner": _sorted_ids(ref.inner, covs),
                "separation": [_sorted_ids(x, covs) for x in ref.separation],
                "admitted": [_sorted_ids(x, covs) for x in ref.admitted],
            }
        )
    payload["refinement"] = refinements
    if spec.singleton_type:
        payload["partition"] = [_sorted_ids(b, covs) for b in level_partition(spec, sample, lat, upper)]
    if cfg.oracle:
        payload["oracle"] = {
            "lower": _oracle_block(spec, sample, poset, lower),
            "upper": _oracle_block(spec, sample, poset, upper),
        }
    table = [["z", "lower", "upper", "bound_lower", "bound_upper"]] + [
        [z, lower[z], upper[z], bounds[z].lower, bounds[z].upper] for z in covs
    ]
    emit(cfg, payload, table, out)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, args, out) -> int:
    sample, poset = _order(cfg, cfg.poset is not None)
    bounds = all_min_max_bounds(cfg.spec, sample, upper_sets(poset))
    covs = poset.elements
    payload = {
        "functional": cfg.spec.describe(),
        "covariates": _ids(covs),
        "bounds": [[_plain(bounds[z].lower), _plain(bounds[z].upper)] for z in covs],
    }
    table = [["z", "lower", "upper"]] + [[z, bounds[z].lower, bounds[z].upper] for z in covs]
    emit(cfg, payload, table, out)
    return EXIT_OK


def read_fits(path: Path, covariates, string_ids: bool) -> tuple:
    """Fits from CSV ``z,<name>,...``; returns (names, list of dicts)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = [c.strip() for c in rows[0]]
    if not header or header[0].lower() != "z" or len(header) < 2:
        raise ValueError(f"{path}: header must be z,<fit>,...")
    fits = [dict() for _ in header[1:]]
    for row in rows[1:]:
        z = row[0].strip() if string_ids else _plain(Fraction(row[0]))
        for k, cell in enumerate(row[1:]):
            fits[k][z] = parse_number(cell)
    missing = [z for z in covariates if any(z not in f for f in fits)]
    if missing:
        raise ValueError(f"{path}: no fitted value for covariates {missing}")
    return header[1:], fits


def cmd_murphy(cfg: RunConfig, args, out) -> int:
    sample = read_data(cfg.input, False)
    spec = cfg.spec
    if args.fits:
        names, fits = read_fits(Path(args.fits), sample.covariates, False)
    elif args.candidates == "unimodal":
        modal = unimodal_fits(spec, sample)
        names = [f"mode{m.mode_index + 1}" for m in modal]
        fits = [m.fit for m in modal]
    else:
        names = ["lower", "upper"]
        fits = [minmax_fit(spec, sample, Side.LOWER), minmax_fit(spec, sample, Side.UPPER)]
    curve = murphy_curve(spec, fits, sample, ids=names)
    if cfg.fmt == "json":
        payload = {
            "functional": spec.describe(),
            "eta": _plain_list(curve.etas),
            "scores": {n: _plain_list(curve.rows[n]) for n in names},
        }
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(curve.to_csv())
    return EXIT_OK


def cmd_unimodal(cfg: RunConfig, args, out) -> int:
    sample = read_data(cfg.input, False)
    spec = cfg.spec
    modal = unimodal_fits(spec, sample)
    covs = sample.covariates
    ids = [m.mode_index + 1 for m in modal]
    payload = {"functional": spec.describe(), "covariates": _ids(covs), "fits": []}
    for mid, m in zip(ids, modal):
        payload["fits"].append(
            {"mode": mid, "values": _plain_list(m.values), "blocks": [_ids(b) for b in m.partition.label(covs)]}
        )
    if len(modal) >= 2:
        dm = dominance_matrix(spec, sample, modal, ids=ids)
        payload["dominance"] = {f"{i},{j}": dm[i, j].value for i in ids for j in ids if i != j}
        payload["dominant"] = dm.dominant()
        matrix = [["mode"] + ids] + dm.as_rows()
    else:
        matrix = None
    emit(cfg, payload, matrix, out)
    return EXIT_OK


def _load_check_fit(path: Path, sample: WeightedSample, side: Side, string_ids: bool) -> dict:
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        doc = json.loads(text)
        key = "values" if "values" in doc else side.value
        if key not in doc:
            raise ValueError(f"{path}: no '{key}' entry")
        covs = doc.get("covariates", list(sample.covariates))
        if not string_ids:
            covs = [_plain(Fraction(str(c))) for c in covs]
        vals = [parse_number(str(v)) for v in doc[key]]
        if len(covs) != len(vals):
            raise ValueError(f"{path}: covariates and values differ in length")
        fit = dict(zip(covs, vals))
    else:
        _, fits = read_fits(path, sample.covariates, string_ids)
        fit = fits[0]
    missing = [z for z in sample.covariates if z not in fit]
    if missing:
        raise ValueError(f"{path}: no fitted value for covariates {missing}")
    return fit


def cmd_check(cfg: RunConfig, args, out) -> int:
    sample, poset = _order(cfg, cfg.poset is not None)
    fit = _load_check_fit(Path(args.fit), sample, cfg.side, cfg.poset is not None)
    order = poset if cfg.poset is not None else None
    block = _oracle_block(cfg.spec, sample, order, fit)
    payload = {"functional": cfg.spec.describe(), **block}
    table = [["eta", "gap"]] + [[f["eta"], f["gap"]] for f in block["failures"]]
    emit(cfg, payload, table, out)
    return EXIT_OK if block["verified"] else EXIT_REFUTED


def cmd_selftest(cfg: RunConfig, args, out) -> int:
    """Random chains checked against the oracle for both extreme fits."""
    rng = random.Random(cfg.seed)
    spec = cfg.spec
    failures = 0
    for _ in range(args.trials):
        n = rng.randint(1, 8)
        ys = [Fraction(rng.randint(-5, 5)) for _ in range(n)]
        ws = [rng.choice((1, 2)) for _ in range(n)]
        sample = WeightedSample.from_values(ys, ws)
        lat = OracleLattice(sample)
        for side in Side:
            rep = verify_simultaneous_optimality(spec, sample, lat, minmax_fit(spec, sample, side), tol=_tol(spec))
            failures += not rep.verified
    payload = {"functional": spec.describe(), "seed": cfg.seed, "trials": args.trials, "failures": failures}
    emit(cfg, payload, [["trials", "failures"], [args.trials, failures]], out)
    return EXIT_OK if failures == 0 else EXIT_REFUTED


COMMANDS = {
    "fit": cmd_fit,
    "fit-poset": cmd_fit_poset,
    "murphy": cmd_murphy,
    "unimodal": cmd_unimodal,
    "check": cmd_check,
    "bounds": cmd_bounds,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isorange", description="Isotonic regression for identifiable functionals.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--functional", required=True, choices=[f.value for f in Family])
    common.add_argument("--alpha", help="quantile level")
    common.add_argument("--tau", help="expectile level")
    common.add_argument("--p", help="exponent of the Lp family")
    common.add_argument("--delta", help="Huber threshold")
    common.add_argument("--ratio-table", help="CSV y,u,w for the ratio family")
    common.add_argument("--solver", choices=[h.value for h in SolverHint])
    common.add_argument("--tolerance", type=float)
    common.add_argument("--max-iter", type=int)
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), help="json by default, csv for murphy")
    common.add_argument("--output", "-o", help="write here instead of stdout")

    def add(name, help_text, data=True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if data:
            p.add_argument("input", help="CSV with header z,y[,weight]")
        return p

    p = add("fit", "minimal and maximal isotonic fits on a total order")
    p.add_argument("--pooling", choices=[m.value for m in Pooling], default=Pooling.POOL_WEAK.value)
    p.add_argument("--oracle", action="store_true", help="verify both fits by brute force")

    p = add("fit-poset", "fits, bounds and refinement on a partial order")
    p.add_argument("--poset", help="edge list of 'a < b' lines")
    p.add_argument("--oracle", action="store_true")

    p = add("murphy", "expected elementary scores along the breakpoint grid")
    p.add_argument("--fits", help="CSV z,<fit>,... of fits to compare")
    p.add_argument("--candidates", choices=("isotonic", "unimodal"), default="isotonic")

    add("unimodal", "fits for every mode position and their dominance matrix")

    p = add("check", "brute-force optimality check of a given fit")
    p.add_argument("--fit", required=True, help="JSON output of fit/fit-poset or CSV z,value")
    p.add_argument("--poset")
    p.add_argument("--side", choices=[s.value for s in Side], default=Side.UPPER.value)

    p = add("bounds", "per-covariate bounds on all solutions")
    p.add_argument("--poset")

    p = add("selftest", "random optimality checks of the chain solver", data=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = build_spec(args)
        cfg = RunConfig(
            command=args.command,
            input=Path(args.input) if getattr(args, "input", None) else None,
            poset=Path(args.poset) if getattr(args, "poset", None) else None,
            spec=spec,
            side=Side(getattr(args, "side", Side.UPPER.value)),
            fmt=args.fmt or ("csv" if args.command == "murphy" else "json"),
            oracle=getattr(args, "oracle", False),
            seed=getattr(args, "seed", None),
        )
        if args.output:
            with open(args.output, "w", newline="") as out:
                return COMMANDS[args.command](cfg, args, out)
        return COMMANDS[args.command](cfg, args, sys.stdout)
    except (IsorangeError, ValueError, OSError, LatticeCapError, csv.Error, json.JSONDecodeError) as exc:
        print(f"isorange: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
