"""Command-line experiment driver.

Usage::

    rgdist <gen|hopcount|figure1|bp|conditions|couple> --manifest FILE [--threads K] [--out DIR] [--svg]

Every command is a pure function of its manifest.  All randomness comes from
the manifest seed through keyed sub-streams, and work is split over
replicates only, so outputs do not depend on ``--threads``.

Exit codes: 0 success, 2 invalid manifest or arguments, 3 a numeric or
statistical check flagged a failure, 1 I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plotting
from ._rng import substream
from ._stats import mean_se
from .branching import LimitLawConfig, estimate_W, extinction_probability, model_survival_curve
from .capacities import (
    CapacitySequence,
    ConditionConfig,
    SurvivalModel,
    check_conditions,
    deterministic_capacities,
    figure1_model,
    iid_capacities,
    limit_offspring_laws,
    offspring_laws,
    read_capacities,
    write_capacities,
)
from .coupling import DEFAULT_XI, coupling_replicate, expected_mismatches
from .distances import (
    HopcountSample,
    _clustered_se,
    default_cap,
    hopcounts_on_graph,
    ladder,
    log_nu,
    sigma_a,
    survival,
)
from .errors import DomainError, ManifestError, QuadratureError, TruncationError
from .graphgen import ConnectionKernel, generate, write_edge_list

COMMANDS = ("gen", "hopcount", "figure1", "bp", "conditions", "couple")
EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_FLAG = 0, 1, 2, 3

_KNOWN = {
    "seed", "model", "capacity_file", "capacities", "kernel", "kernel_prime", "N", "ladder",
    "replicates", "pairs_per_graph", "cap", "nu", "conditional", "tolerance", "levels",
    "w_reps", "depth", "n_max", "t_range", "tau", "eps", "xi", "threads", "out",
}
_NOT_HASHED = {"threads", "out"}


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


def _count(d: dict, key: str, default: int | None = None, minimum: int = 1) -> int | None:
    v = d.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ManifestError(f"{key!r} must be an integer >= {minimum}, got {v!r}")
    return v


def _real(d: dict, key: str, default: float | None = None) -> float | None:
    v = d.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ManifestError(f"{key!r} must be a finite number, got {v!r}")
    return float(v)


@dataclass
class Manifest:
    """Validated experiment manifest (flat JSON object)."""

    raw: dict
    seed: int
    model: SurvivalModel | None
    capacity_file: str | None
    capacities: str
    kernel: str
    sizes: list
    replicates: int
    pairs_per_graph: int
    base_dir: Path

    @property
    def digest(self) -> str:
        body = {k: v for k, v in self.raw.items() if k not in _NOT_HASHED}
        blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def header(self) -> str:
        return f"rgdist manifest_sha256={self.digest} seed={self.seed}"

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def nu(self) -> float:
        """Limit ``nu`` used for sigma_N and ladders: explicit, else the model's, else the file's."""
        v = _real(self.raw, "nu")
        if v is not None:
            return v
        if self.model is not None:
            return self.model.nu()
        return self.file_sequence().nu_N

    def file_sequence(self) -> CapacitySequence:
        return read_capacities(self.base_dir / self.capacity_file)

    def sequence(self, N: int, r: int = 0) -> CapacitySequence:
        """Capacities for size ``N``; i.i.d. capacities are redrawn per replicate."""
        if self.capacity_file is not None:
            return self.file_sequence()
        if self.capacities == "iid":
            return iid_capacities(self.model, N, substream(self.seed, N, r, 7))
        return deterministic_capacities(self.model, N)


def _parse_model(spec) -> SurvivalModel:
    if spec == "figure1":
        return figure1_model()
    if not isinstance(spec, dict):
        raise ManifestError("'model' must be \"figure1\" or an object with a 'kind'")
    try:
        return SurvivalModel.from_dict(spec)
    except KeyError as e:
        raise ManifestError(f"model is missing field {e}") from None


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ManifestError(f"manifest {path} not found") from None
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest is not valid JSON: {e}") from None
    return validate_manifest(raw, path.parent)


def validate_manifest(raw: dict, base_dir=Path(".")) -> Manifest:
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    unknown = sorted(set(raw) - _KNOWN)
    if unknown:
        raise ManifestError(f"unknown manifest keys: {', '.join(unknown)}")
    if "seed" not in raw:
        raise ManifestError("manifest must give a 'seed' (no clock-based default)")
    seed = _count(raw, "seed", minimum=0)
    has_model, has_file = "model" in raw, "capacity_file" in raw
    if has_model == has_file:
        raise ManifestError("give exactly one of 'model' and 'capacity_file'")
    model = _parse_model(raw["model"]) if has_model else None
    capacities = raw.get("capacities", "deterministic")
    if capacities not in ("deterministic", "iid"):
        raise ManifestError("'capacities' must be 'deterministic' or 'iid'")
    kernel = raw.get("kernel", "poissonian")
    ConnectionKernel.by_name(kernel)
    if "kernel_prime" in raw:
        ConnectionKernel.by_name(raw["kernel_prime"])
    m = Manifest(raw, seed, model, raw.get("capacity_file"), capacities, kernel, [],
                 _count(raw, "replicates", 1), _count(raw, "pairs_per_graph", 1), Path(base_dir))
    if has_file:
        m.sizes = [m.file_sequence().N]
    elif "ladder" in raw:
        lad = raw["ladder"]
        if not isinstance(lad, dict):
            raise ManifestError("'ladder' must be an object with 'M' and 'k_max'")
        nu = _real(lad, "nu")
        m.sizes = ladder(_count(lad, "M", minimum=2), nu if nu is not None else m.nu(),
                         _count(lad, "k_max", minimum=0))
    elif "N" in raw:
        sizes = raw["N"] if isinstance(raw["N"], list) else [raw["N"]]
        m.sizes = [_count({"N": n}, "N", minimum=2) for n in sizes]
        if not m.sizes:
            raise ManifestError("'N' must not be empty")
    else:
        raise ManifestError("give 'N' (int or list) or 'ladder'")
    for key in ("cap", "w_reps", "depth", "n_max"):
        _count(raw, key)
    for key in ("tolerance", "tau", "eps", "xi", "nu"):
        _real(raw, key)
    return m


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path: Path, header: str, columns: list, rows) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _map(fn, jobs: list, threads: int) -> list:
    """Ordered map over independent jobs; a process pool when ``threads > 1``."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


def _figures(curves, out: Path, stem: str, svg: bool, title: str | None = None):
    plotting.survival_figure(curves, out / f"{stem}.png", title=title)
    if svg:
        plotting.polyline_svg(curves, out / f"{stem}.svg")


# ---------------------------------------------------------------------------
# Workers (module level so they pickle)
# ---------------------------------------------------------------------------


def _gen_job(job):
    m, N, r = job
    seq = m.sequence(N, r)
    return generate(seq, ConnectionKernel.by_name(m.kernel), substream(m.seed, N, r, 0))


def _hop_job(job):
    m, N, r, cap, nu = job
    seq = m.sequence(N, r)
    g = generate(seq, ConnectionKernel.by_name(m.kernel), substream(m.seed, N, r, 0))
    return hopcounts_on_graph(g, m.pairs_per_graph, substream(m.seed, N, r, 1), cap, r, nu)


def _couple_job(job):
    m, N, r, cap, kp = job
    seq = m.sequence(N, r)
    fail, rep = coupling_replicate(seq, ConnectionKernel.by_name(kp), m.pairs_per_graph,
                                   _derive(m.seed, N), r, cap)
    return fail, rep


def _derive(seed: int, *keys) -> int:
    return int(substream(seed, *keys).integers(2**63))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(m: Manifest, out: Path, threads: int = 1, svg: bool = False) -> int:
    """One edge-list CSV per (N, replicate), plus the capacities used."""
    jobs = [(m, N, r) for N in m.sizes for r in range(m.replicates)]
    graphs = _map(_gen_job, jobs, threads)
    for (_, N, r), g in zip(jobs, graphs):
        write_edge_list(out / f"edges_N{N}_r{r}.csv", g, comment=m.header)
        if r == 0 or m.capacities == "iid":
            name = f"capacities_N{N}.csv" if m.capacities != "iid" else f"capacities_N{N}_r{r}.csv"
            write_capacities(out / name, m.sequence(N, r), comment=m.header)
    write_csv(out / "gen_summary.csv", m.header, ["N", "replicate", "edges", "mean_degree"],
              [(N, r, g.edge_count, 2 * g.edge_count / N) for (_, N, r), g in zip(jobs, graphs)])
    return EXIT_OK


def _hopcount_samples(m: Manifest, nu: float, threads: int) -> dict:
    out = {}
    for N in m.sizes:
        cap = m.get("cap") or default_cap(N, nu)
        parts = _map(_hop_job, [(m, N, r, cap, nu) for r in range(m.replicates)], threads)
        out[N] = HopcountSample.concat(parts)
    return out


def _curve_rows(es, conditional: bool):
    return list(es.rows(conditional))


def cmd_hopcount(m: Manifest, out: Path, threads: int = 1, svg: bool = False) -> int:
    """Survival curves per N with clustered SEs, and a sigma_N / a_N summary table."""
    nu = m.nu()
    cond = bool(m.get("conditional", True))
    samples = _hopcount_samples(m, nu, threads)
    summary, curves = [], []
    flag = False
    for N, s in samples.items():
        es = survival(s)
        sa = sigma_a(N, nu)
        if cond and not es.conditional_defined:
            flag = True
        write_csv(out / f"survival_N{N}.csv", m.header, ["t", "survival", "se", "n_finite", "n_total"],
                  _curve_rows(es, cond))
        fin = s.distance[s.finite]
        summary.append((N, sa.sigma, sa.a, log_nu(N, nu), fin.mean() if fin.size else float("nan"),
                        es.n_finite, es.n_total, es.infinite_count, es.censored_count))
        curves.append(plotting.Curve(f"N={N}", es.t, es.cond_survival if cond else es.survival,
                                     es.cond_se if cond else es.se))
    write_csv(out / "hopcount_summary.csv", m.header,
              ["N", "sigma", "a", "log_nu_N", "mean_finite", "n_finite", "n_total", "infinite", "censored"],
              summary)
    _figures(curves, out, "survival", svg)
    return EXIT_FLAG if flag else EXIT_OK


def curve_deviation(ref_t, ref_s, t, s, shift: int, levels=(0.05, 0.95)) -> float:
    """Largest ``|S(t + shift) - S_ref(t)|`` over ``t`` where either value lies within ``levels``."""
    lo, hi = levels
    ref = dict(zip(np.asarray(ref_t).tolist(), ref_s))
    cur = {tt - shift: v for tt, v in zip(np.asarray(t).tolist(), s)}
    worst = 0.0
    for tt in sorted(set(ref) | set(cur)):
        a = ref.get(tt, 1.0 if tt < min(ref) else 0.0)
        b = cur.get(tt, 1.0 if tt < min(cur) else 0.0)
        if lo <= a <= hi or lo <= b <= hi:
            worst = max(worst, abs(a - b))
    return worst


def cmd_figure1(m: Manifest, out: Path, threads: int = 1, svg: bool = False) -> int:
    """Ladder curves shifted by 2k hops and their largest mutual deviation."""
    if "ladder" not in m.raw:
        raise ManifestError("figure1 needs a 'ladder' entry")
    nu = m.nu()
    tol = _real(m.raw, "tolerance", 0.05)
    levels = tuple(m.get("levels", (0.05, 0.95)))
    samples = _hopcount_samples(m, nu, threads)
    rows, report, curves = [], [], []
    ref = None
    flag = False
    for k, (N, s) in enumerate(samples.items()):
        es = survival(s)
        if not es.conditional_defined:
            raise DomainError(f"no finite distances at N={N}")
        sa = sigma_a(N, nu)
        for t, v, e, _, _ in es.rows(True):
            rows.append((k, N, t, t - 2 * k, v, e))
        if ref is None:
            ref = es
            dev = 0.0
        else:
            dev = curve_deviation(ref.t, ref.cond_survival, es.t, es.cond_survival, 2 * k, levels)
        flag |= dev > tol
        report.append((k, N, sa.sigma, sa.a, dev, tol, dev <= tol))
        curves.append(plotting.Curve(f"N={N} (shift {2 * k})", es.t - 2 * k, es.cond_survival, es.cond_se))
    write_csv(out / "figure1_curves.csv", m.header, ["k", "N", "t", "t_shifted", "survival", "se"], rows)
    write_csv(out / "figure1_report.csv", m.header, ["k", "N", "sigma", "a", "deviation", "tolerance", "pass"],
              report)
    _figures(curves, out, "figure1", svg, title="Shifted conditional survival")
    return EXIT_FLAG if flag else EXIT_OK


def cmd_bp(m: Manifest, out: Path, threads: int = 1, svg: bool = False) -> int:
    """W samples for the model's offspring laws and the limiting survival curve per N."""
    if m.model is not None:
        n_max = m.get("n_max") or 1000
        laws = limit_offspring_laws(m.model, n_max)
    else:
        laws = offspring_laws(m.file_sequence(), m.get("n_max"))
    reps = m.get("w_reps", 10_000)
    w = estimate_W(laws.f, laws.g, m.get("depth"), reps, substream(m.seed, 0))
    if m.model is not None:
        # truncation shaves the heavy tail off g; the curve uses the exact limits
        mu, nu = m.model.mean(), m.model.nu()
    else:
        mu, nu = laws.f.normalized_mean(), laws.g.normalized_mean()
    cfg = LimitLawConfig(mu, nu, w)
    q = extinction_probability(laws.f, laws.g)
    mean_w, se_w = mean_se(w)
    zero = (w <= 1e-9).astype(float)
    q_hat, q_se = mean_se(zero)
    flag = abs(mean_w - 1.0) > 4 * se_w or abs(q_hat - q) > 4 * max(q_se, math.sqrt(q * (1 - q) / reps))
    write_csv(out / "w_samples.csv", m.header, ["replicate", "w"], enumerate(w))
    write_csv(out / "bp_summary.csv", m.header,
              ["mu", "nu", "kappa", "mean_w", "se_w", "q_hat", "q_fixed_point", "flag"],
              [(mu, nu, cfg.kappa, mean_w, se_w, q_hat, q, flag)])
    curves = []
    for N in m.sizes:
        sa = sigma_a(N, nu)
        t_range = m.get("t_range") or list(range(0, 2 * sa.sigma + 6))
        vals, se = model_survival_curve(cfg, N, t_range, return_se=True)
        write_csv(out / f"model_curve_N{N}.csv", m.header, ["t", "survival_model", "se"],
                  [(t, vals[t], se[t]) for t in sorted(vals)])
        ts = np.array(sorted(vals))
        curves.append(plotting.Curve(f"N={N}", ts, np.array([vals[t] for t in ts]),
                                     np.array([se[t] for t in ts])))
    _figures(curves, out, "model_curves", svg, title="Limit law")
    plotting.histogram_figure(w[w > 1e-9], out / "w_hist.png", "W (positive samples)")
    return EXIT_FLAG if flag else EXIT_OK


def cmd_conditions(m: Manifest, out: Path, threads: int = 1, svg: bool = False) -> int:
    """Condition discrepancies across the N grid; flags any failed maximum bound."""
    if m.model is None:
        raise ManifestError("conditions needs a 'model' (the limit laws come from it)")
    tau = _real(m.raw, "tau", m.model.params[0] if m.model.kind == "pareto" else None)
    if tau is None:
        raise ManifestError("conditions needs 'tau' for non-pareto models")
    eps = _real(m.raw, "eps", 0.05)
    cfg = ConditionConfig.from_model(m.model, tau, eps, m.get("n_max") or 1000)
    reports = [check_conditions(m.sequence(N), cfg, m.get("n_max")) for N in m.sizes]
    cols = ["N", "mu_diff", "nu_diff", "dtv_f", "dtv_g", "moment", "max_lambda", "max_bound", "c3_pass"]
    write_csv(out / "conditions.csv", m.header, cols, [[getattr(r, c) for c in cols] for r in reports])
    series = {name: [max(getattr(r, name), 1e-300) for r in reports]
              for name in ("mu_diff", "nu_diff", "dtv_f", "dtv_g")}
    plotting.line_figure(m.sizes, series, out / "conditions.png", "N", "discrepancy", logx=True, logy=True)
    return EXIT_OK if all(r.c3_pass for r in reports) else EXIT_FLAG


def cmd_couple(m: Manifest, out: Path, threads: int = 1, svg: bool = False) -> int:
    """Coupling-failure trend over the N grid, with per-node mismatch counts of replicate 0."""
    kp = m.get("kernel_prime", "generalized")
    xi = _real(m.raw, "xi", DEFAULT_XI)
    rows, fails = [], []
    summary = {"xi": xi, "kernel_prime": kp, "sizes": []}
    for N in m.sizes:
        seq0 = m.sequence(N, 0)
        cap = m.get("cap") or default_cap(N, seq0.nu_N if seq0.nu_N > 1 else 2.0)
        res = _map(_couple_job, [(m, N, r, cap, kp) for r in range(m.replicates)], threads)
        fail = np.concatenate([f for f, _ in res])
        cluster = np.repeat(np.arange(m.replicates), m.pairs_per_graph)
        p, se = float(fail.mean()), _clustered_se(fail, cluster)
        totals = np.array([rep.total for _, rep in res], dtype=float)
        a_frac = float(np.mean([_a_n(rep, xi) for _, rep in res]))
        expect = expected_mismatches(seq0, ConnectionKernel.by_name(kp)) if N <= 20_000 else float("nan")
        rows.append((N, p, se, totals.mean(), expect, a_frac))
        fails.append(p)
        rep0 = res[0][1]
        write_csv(out / f"mismatch_N{N}.csv", m.header, ["node", "lambda", "k_i"],
                  [(i + 1, lam, k) for i, (lam, k) in enumerate(zip(seq0.values, rep0.k_i))])
        summary["sizes"].append({"N": N, "total_mismatches": int(rep0.total), "A_N": _a_n(rep0, xi),
                                 "c_N": float(N) ** xi, "failure": p, "failure_se": se})
    write_csv(out / "coupling_trend.csv", m.header,
              ["N", "failure", "se", "mean_mismatches", "expected_mismatches", "A_N_fraction"], rows)
    summary["manifest_sha256"], summary["seed"] = m.digest, m.seed
    (out / "coupling_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    plotting.line_figure(m.sizes, {"P(H != H')": [max(f, 1e-6) for f in fails]}, out / "coupling_trend.png",
                         "N", "failure frequency", logx=True, logy=True)
    decreasing = all(b < a for a, b in zip(fails, fails[1:]))
    return EXIT_OK if decreasing else EXIT_FLAG


def _a_n(rep, xi: float) -> bool:
    c = float(rep.N) ** xi
    return bool(np.sum(rep.k_i[rep.capacities > c]) == 0)


_DISPATCH = {
    "gen": cmd_gen,
    "hopcount": cmd_hopcount,
    "figure1": cmd_figure1,
    "bp": cmd_bp,
    "conditions": cmd_conditions,
    "couple": cmd_couple,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rgdist", description="Distances in rank-1 inhomogeneous random graphs.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--manifest", required=True, help="experiment manifest (JSON)")
    ap.add_argument("--threads", type=int, default=None, help="worker processes (default: manifest or 1)")
    ap.add_argument("--out", default=None, help="output directory (default: manifest 'out' or ./rgdist_out)")
    ap.add_argument("--svg", action="store_true", help="also write survival curves as plain SVG polylines")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    try:
        m = load_manifest(args.manifest)
        threads = args.threads if args.threads is not None else _count(m.raw, "threads", 1)
        if threads < 1:
            raise ManifestError("--threads must be at least 1")
        out = Path(args.out or m.get("out") or "rgdist_out")
        out.mkdir(parents=True, exist_ok=True)
        code = _DISPATCH[args.command](m, out, threads, args.svg)
    except (ManifestError, DomainError, TruncationError) as e:
        print(f"rgdist: invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (QuadratureError, OverflowError, FloatingPointError) as e:
        print(f"rgdist: numeric failure: {e}", file=sys.stderr)
        return EXIT_FLAG
    except OSError as e:
        print(f"rgdist: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    if code == EXIT_FLAG:
        print("rgdist: a check flagged a failure; see the report files", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
