"""Command-line interface: run, bounds, sweep, css-verify, selftest."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import css, gf2
from .bounds import analytic_rates, uncertainty_sum, verify_tradeoff
from .protocol import ConfigError, SessionConfig, SessionResult, BranchResult, run_session
from .quantum import Channel, channel_from_json, random_channel, random_density

SWEEP_HEADER = [
    "param1",
    "param2",
    "p_x",
    "p_z",
    "q_x",
    "q_z",
    "matched_bound",
    "mismatched_bound",
    "q_hat_x",
    "q_hat_z",
    "flip_applied",
    "decode_success",
    "key_length",
    "abort_reason",
    "seed",
]

BOUNDS_FIELDS = [
    "p_x_plus",
    "p_x_minus",
    "q_x0",
    "q_x1",
    "p_z0",
    "p_z1",
    "q_z_plus",
    "q_z_minus",
    "p_x",
    "p_z",
    "q_x",
    "q_z",
    "lhs_f1",
    "lhs_f2",
    "lhs_f3",
    "lhs_f4",
    "lhs_f9",
    "lhs_f10",
    "matched_bound",
    "mismatched_bound",
    "f11_sum",
    "all_satisfied",
]


class UsageError(Exception):
    pass


# rendering


def _json_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot render {x} as JSON")
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def render_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits and stable key order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _json_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {render_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + render_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot render {type(obj).__name__}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def render_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(row.get(h)) for h in header])
    return buf.getvalue()


def _bits(v) -> str | None:
    return None if v is None else "".join(map(str, np.asarray(v).tolist()))


def branch_to_dict(b: BranchResult) -> dict:
    return {
        "q_hat_reconcile": b.q_hat_reconcile,
        "q_hat_amplify": b.q_hat_amplify,
        "flip_applied": b.flip_applied,
        "syndrome": _bits(b.syndrome),
        "decode_success": b.decode_success,
        "alice_key": _bits(b.alice_key),
        "bob_key": _bits(b.bob_key),
        "key_length": b.key_length,
        "abort_reason": None if b.abort_reason is None else b.abort_reason.value,
        "code": {
            "length": b.code_length,
            "dim": b.code_dim,
            "subcode_dim": b.subcode_dim,
            "blocks_total": b.blocks_total,
            "blocks_decoded": b.blocks_decoded,
        },
    }


def session_to_dict(result: SessionResult, seed: int | None = None) -> dict:
    p = branch_to_dict(result.primary)
    out = {"seed": seed, "q_hat_x": result.q_hat_x, "q_hat_z": result.q_hat_z}
    for key in ("flip_applied", "syndrome", "decode_success", "alice_key", "bob_key", "key_length", "abort_reason", "code"):
        out[key] = p[key]
    out["bucket_sizes"] = dict(result.bucket_sizes)
    out["branches"] = {name: branch_to_dict(b) for name, b in result.branches.items()}
    return out


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write output file {out}: {exc.strerror or exc}") from None


def _load_json(arg: str, what: str):
    """Parse ``arg`` as inline JSON, or as a path to a JSON file."""
    text = arg
    if not arg.lstrip().startswith(("{", "[")):
        try:
            text = Path(arg).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {what} file {arg}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} is not valid JSON: {exc}") from None


def _parse_channel(obj) -> Channel:
    try:
        return channel_from_json(obj)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_config(obj: dict, seed: int | None) -> SessionConfig:
    if not isinstance(obj, dict):
        raise UsageError("config: expected a JSON object")
    obj = dict(obj)
    if seed is not None:
        obj["seed"] = seed
    try:
        return SessionConfig.from_dict(obj)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


# commands


def cmd_run(config_path: str, seed: int | None = None) -> tuple[dict, int]:
    obj = _load_json(config_path, "config")
    if not isinstance(obj, dict) or "channel" not in obj:
        raise UsageError("channel: missing channel definition")
    ch = _parse_channel(obj["channel"])
    config = _parse_config(obj, seed)
    result = run_session(ch, config)
    return session_to_dict(result, config.seed), 0


def bounds_row(ch: Channel) -> dict:
    rates = analytic_rates(ch)
    report = verify_tradeoff(ch, rates)
    row = rates.as_dict()
    row.update(
        lhs_f1=report.lhs_f1,
        lhs_f2=report.lhs_f2,
        lhs_f3=report.lhs_f3,
        lhs_f4=report.lhs_f4,
        lhs_f9=report.lhs_f9,
        lhs_f10=report.lhs_f10,
        matched_bound=report.matched_bound,
        mismatched_bound=report.mismatched_bound,
        f11_sum=report.f11_sum,
        all_satisfied=report.all_satisfied,
    )
    return {k: row[k] for k in BOUNDS_FIELDS}


def cmd_bounds(channel_json: str) -> dict:
    return bounds_row(_parse_channel(_load_json(channel_json, "channel")))


SWEEPABLE = {"gamma": ("r_x", "r_z", "r_xz"), "unitary_mixture": ("p",)}


def _grid(param: dict) -> list[float]:
    try:
        name, start, stop, steps = param["name"], float(param["start"]), float(param["stop"]), int(param["steps"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"params: each entry needs name, start, stop, steps ({exc})") from None
    if steps < 1:
        raise UsageError(f"params.{name}.steps: must be at least 1")
    if steps == 1:
        return [start]
    return [start + (stop - start) * i / (steps - 1) for i in range(steps)]


def _apply_params(template: dict, values: dict[str, float]) -> dict:
    ch = json.loads(json.dumps(template))
    kind = ch.get("kind")
    for name, value in values.items():
        if name not in SWEEPABLE.get(kind, ()):
            raise UsageError(f"params.{name}: not sweepable for channel kind {kind!r}")
        if not 0.0 <= value <= 1.0:
            raise UsageError(f"params.{name}: value {value} outside [0, 1]")
        if kind == "gamma":
            ch[name] = value
        else:
            terms = ch.get("terms", [])
            if len(terms) != 2:
                raise UsageError("params.p: weight sweeps need a two-term mixture")
            terms[0]["p"] = value
            terms[1]["p"] = 1.0 - value
    return ch


def derive_seed(base_seed: int, point: int, session: int) -> int:
    ss = np.random.SeedSequence([base_seed, point, session])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sweep_row(job) -> dict:
    ch_json, values, config_dict, seed = job
    ch = channel_from_json(ch_json)
    config = SessionConfig.from_dict({**config_dict, "seed": seed})
    bounds = bounds_row(ch)
    result = run_session(ch, config)
    row = {k: bounds[k] for k in ("p_x", "p_z", "q_x", "q_z", "matched_bound", "mismatched_bound")}
    row.update(
        param1=values[0],
        param2=values[1] if len(values) > 1 else None,
        q_hat_x=result.q_hat_x,
        q_hat_z=result.q_hat_z,
        flip_applied=result.flip_applied,
        decode_success=result.decode_success,
        key_length=result.key_length,
        abort_reason=None if result.abort_reason is None else result.abort_reason.value,
        seed=seed,
    )
    return row


def sweep_jobs(spec: dict, seed: int | None = None) -> list:
    if not isinstance(spec, dict):
        raise UsageError("sweep spec: expected a JSON object")
    template = spec.get("channel")
    if template is None:
        raise UsageError("channel: missing channel template")
    params = spec.get("params")
    if not isinstance(params, list) or not 1 <= len(params) <= 2:
        raise UsageError("params: give one or two swept parameters")
    per_point = spec.get("sessions_per_point", 1)
    if not isinstance(per_point, int) or per_point < 1:
        raise UsageError("sessions_per_point: must be a positive integer")
    config = _parse_config(spec.get("session", {}), seed)
    grids = [_grid(p) for p in params]
    names = [p["name"] for p in params]
    points = [(a,) for a in grids[0]] if len(grids) == 1 else [(a, b) for a in grids[0] for b in grids[1]]
    jobs = []
    for i, values in enumerate(points):
        ch_json = _apply_params(template, dict(zip(names, values)))
        _parse_channel(ch_json)
        for s in range(per_point):
            jobs.append((ch_json, values, config.to_dict(), derive_seed(config.seed, i, s)))
    return jobs


def cmd_sweep(spec_path: str, seed: int | None = None, workers: int = 1) -> list[dict]:
    jobs = sweep_jobs(_load_json(spec_path, "sweep spec"), seed)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_row, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_sweep_row(job) for job in jobs]


def random_nested_codes(n: int, dim_c1: int, dim_c2: int, rng: np.random.Generator):
    if not 1 <= n <= css.MAX_QUBITS_DENSITY:
        raise UsageError(f"n: must lie in [1, {css.MAX_QUBITS_DENSITY}]")
    if not 0 <= dim_c2 <= dim_c1 <= n:
        raise UsageError("dims: need 0 <= dim C2 <= dim C1 <= n")
    c1 = gf2.LinearCode.from_generator(gf2.random_full_rank(dim_c1, n, rng))
    return c1, gf2.sample_subcode(c1, dim_c2, rng)


def cmd_css_verify(n: int, dim_c1: int, dim_c2: int, seed: int = 0) -> dict:
    c1, c2 = random_nested_codes(n, dim_c1, dim_c2, np.random.default_rng(seed))
    report = css.verify_identities(c1, c2)
    report["seed"] = seed
    report["c1_generator"] = [_bits(r) for r in c1.generator]
    report["c2_generator"] = [_bits(r) for r in c2.generator]
    return report


def decoder_bruteforce_check(code: gf2.LinearCode) -> int:
    """Number of syndromes where the table disagrees with exhaustive search."""
    n = code.n
    vecs = gf2.all_vectors(n)
    syn = gf2.matmul(vecs, code.parity_check.T)
    weights = vecs.sum(axis=1)
    m = code.n - code.k
    keys = syn.astype(np.int64) @ (1 << np.arange(m - 1, -1, -1, dtype=np.int64))
    bad = 0
    for s in range(1 << m):
        cand = np.flatnonzero(keys == s)
        best = cand[weights[cand] == weights[cand].min()]
        # vecs are in increasing integer order, so best[0] is lexicographically smallest
        got = gf2.coset_leader_decode(code.parity_check, gf2.int_to_bits(s, m))
        if not np.array_equal(got, vecs[best[0]]):
            bad += 1
    return bad


def cmd_selftest(seed: int = 0, channels: int = 1000, states: int = 10_000) -> dict:
    rng = np.random.default_rng(seed)
    worst_f11, min_pair, tradeoff_bad = -math.inf, math.inf, 0
    for _ in range(channels):
        rep = verify_tradeoff(random_channel(rng))
        worst_f11 = max(worst_f11, rep.f11_sum)
        min_pair = min(min_pair, rep.min_pairwise)
        tradeoff_bad += not rep.all_satisfied
    min_unc, unc_bad = math.inf, 0
    for _ in range(states):
        u = uncertainty_sum(random_density(rng))
        min_unc = min(min_unc, u)
        unc_bad += u < 1 - 1e-9
    codes = [("hamming_7_4", gf2.hamming_7_4())]
    for n, k in ((8, 3), (10, 4), (12, 6)):
        codes.append((f"random_{n}_{k}", gf2.random_code(n, k, rng)))
    decoder = {name: decoder_bruteforce_check(code) for name, code in codes}
    passed = tradeoff_bad == 0 and unc_bad == 0 and not any(decoder.values())
    return {
        "seed": seed,
        "tradeoff": {
            "channels": channels,
            "violations": tradeoff_bad,
            "worst_f11_sum": worst_f11,
            "min_pairwise_sum": min_pair,
        },
        "uncertainty": {"states": states, "violations": unc_bad, "min_sum": min_unc},
        "decoder": {"mismatched_syndromes": decoder},
        "passed": passed,
    }


def _flat(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flat(v, f"{prefix}{k}."))
        elif isinstance(v, list):
            out[prefix + k] = " ".join(map(str, v))
        else:
            out[prefix + k] = v
    return out


def _render(obj, fmt: str) -> str:
    if fmt == "json":
        return render_json(obj)
    rows = obj if isinstance(obj, list) else [_flat(obj)]
    header = list(rows[0]) if rows else []
    return render_csv(header, rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    parser = argparse.ArgumentParser(prog="mismatch-qkd", description=__doc__)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one session from a config file")
    p.add_argument("config", help="session config (JSON file or inline JSON)")

    p = sub.add_parser("bounds", parents=[common], help="analytic rates and key-rate bounds")
    p.add_argument("channel", help="channel (JSON file or inline JSON)")

    p = sub.add_parser("sweep", parents=[common], help="sessions over a parameter grid")
    p.add_argument("spec", help="sweep spec (JSON file or inline JSON)")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("css-verify", parents=[common], help="check the CSS mixture identities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim-c1", type=int, required=True)
    p.add_argument("--dim-c2", type=int, required=True)

    p = sub.add_parser("selftest", parents=[common], help="property suites and decoder checks")
    p.add_argument("--channels", type=int, default=1000)
    p.add_argument("--states", type=int, default=10_000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    seed, out = args.seed, args.out
    try:
        if args.command == "run":
            obj, code = cmd_run(args.config, seed)
            _emit(_render(obj, args.format or "json"), out)
            return code
        if args.command == "bounds":
            _emit(_render(cmd_bounds(args.channel), args.format or "csv"), out)
            return 0
        if args.command == "sweep":
            spec = _load_json(args.spec, "sweep spec")
            out = out or (spec.get("out") if isinstance(spec, dict) else None)
            fmt = args.format or (spec.get("format") if isinstance(spec, dict) else None) or "csv"
            rows = cmd_sweep(args.spec, seed, args.workers)
            _emit(render_csv(SWEEP_HEADER, rows) if fmt == "csv" else render_json(rows), out)
            return 0
        if args.command == "css-verify":
            report = cmd_css_verify(args.n, args.dim_c1, args.dim_c2, seed or 0)
            _emit(_render(report, args.format or "json"), out)
            return 0 if report["passed"] else 1
        if args.command == "selftest":
            report = cmd_selftest(seed or 0, args.channels, args.states)
            _emit(_render(report, args.format or "json"), out)
            return 0 if report["passed"] else 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except gf2.DecoderCapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 2


if __name__ == "__main__":
    sys.exit(main())
