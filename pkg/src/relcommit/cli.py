"""Experiment driver: sessions, attacks, analyses, searches, verification.

Every command is deterministic given its flags and seed.  A flat key=value
config file may supply defaults (overridden by flags); the only environment
knob is RELCOMMIT_OUTDIR, which relocates relative output paths.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from multiprocessing import Pool

from . import adversary, analysis, engine, net
from .field import DEFAULT_POLYS, FieldSpec
from .scheme import BOT, SchemeParams, multiround_verify


def _frac(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _outpath(path):
    if path is None:
        return None
    outdir = os.environ.get("RELCOMMIT_OUTDIR")
    if outdir and not os.path.isabs(path):
        os.makedirs(outdir, exist_ok=True)
        return os.path.join(outdir, path)
    return path


def _load_config(path):
    cfg = {}
    if path:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                k, _, v = line.partition("=")
                cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def _get(args, cfg, key, cast, default=None):
    v = getattr(args, key, None)
    if v is None:
        v = cfg.get(key)
    if v is None:
        if default is None:
            raise SystemExit(f"error: missing required option --{key.replace('_', '-')}")
        return default
    return cast(v)


def _field(args, cfg) -> FieldSpec:
    n = _get(args, cfg, "n", int)
    poly = getattr(args, "poly", None) or cfg.get("poly")
    if poly is None:
        return FieldSpec(n, DEFAULT_POLYS[n])
    return FieldSpec(n, int(poly, 16))


def _params(args, cfg) -> SchemeParams:
    spec = _field(args, cfg)
    m = _get(args, cfg, "m", int, 0)
    k = getattr(args, "domain_bits", None) or cfg.get("domain_bits")
    fc = _get(args, cfg, "first_committer", str, "P")
    return SchemeParams(spec, m, int(k) if k else None, fc)


def _endpoint(text: str):
    host, _, port = text.rpartition(":")
    return (host or "127.0.0.1", int(port))


# -- worker-pool fanout -------------------------------------------------------


def _honest_chunk(job):
    n, poly, m, k, fc, value, seed, start, stop = job
    params = SchemeParams(FieldSpec(n, poly), m, k, fc)
    fails = 0
    for t in range(start, stop):
        tseed = engine.stream_u64(seed, engine.STREAM_TRIAL, t)
        if engine.run_honest_session(params, value, tseed).outcome != value:
            fails += 1
    return fails


def _tightness_chunk(job):
    n, poly, m, k, fc, target, tables_text, seed, start, stop = job
    params = SchemeParams(FieldSpec(n, poly), m, k, fc)
    tables = adversary.parse_tables(tables_text)
    hits = kept = 0
    for t in range(start, stop):
        tseed = engine.stream_u64(seed, engine.STREAM_TRIAL, t)
        commit, open_ = adversary.tightness_strategy(target, tables, params)
        tr = engine.run_attack_session(params, commit, open_, tseed)
        if 0 in tr.challenges():
            continue
        kept += 1
        if tr.outcome == target:
            hits += 1
    return hits, kept


def _fanout(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with Pool(workers) as pool:
        return pool.map(fn, jobs)


def _chunks(trials, pieces):
    step = max(1, (trials + pieces - 1) // pieces)
    return [(lo, min(lo + step, trials)) for lo in range(0, trials, step)]


# -- subcommands --------------------------------------------------------------


def cmd_run(args, cfg) -> int:
    params = _params(args, cfg)
    value = _get(args, cfg, "value", lambda v: int(v, 16))
    seed = _get(args, cfg, "seed", int)
    trials = _get(args, cfg, "trials", int, 1)
    workers = _get(args, cfg, "workers", int, 1)
    if trials < 1:
        raise SystemExit("error: --trials must be >= 1")
    spec = params.field
    jobs = [(spec.n, spec.poly, params.m, params.domain_bits,
             params.first_committer, value, seed, lo, hi)
            for lo, hi in _chunks(trials, workers * 8 if workers > 1 else 1)]
    fails = sum(_fanout(_honest_chunk, jobs, workers))
    out = _outpath(getattr(args, "out", None) or cfg.get("out"))
    if out:
        first = engine.run_honest_session(
            params, value, engine.stream_u64(seed, engine.STREAM_TRIAL, 0))
        with open(out, "w") as fh:
            fh.write(first.to_text())
    expected = 1 - (1 - 2.0 ** -spec.n) ** (params.m + 1)
    sigma = math.sqrt(expected * (1 - expected) / trials)
    rate = fails / trials
    ok = abs(rate - expected) <= 3 * sigma
    print(f"trials={trials} accept={trials - fails} reject={fails} "
          f"failure_rate={rate:.6f} expected={expected:.6f} "
          f"sigma={sigma:.6f} pass={'true' if ok else 'false'}")
    return 0 if ok else 1


def _load_or_search_tables(spec: FieldSpec, args, cfg) -> adversary.ChshTables:
    cache_dir = _outpath(getattr(args, "cache", None) or cfg.get("cache") or ".")
    path = os.path.join(cache_dir, f"chsh_n{spec.n}_poly{spec.poly:x}.tables")
    if os.path.exists(path):
        with open(path) as fh:
            return adversary.parse_tables(fh.read())
    tables = adversary.brute_force_chsh(spec)
    os.makedirs(cache_dir, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(adversary.serialize_tables(tables))
    return tables


def cmd_attack(args, cfg) -> int:
    params = _params(args, cfg)
    seed = _get(args, cfg, "seed", int)
    trials = _get(args, cfg, "trials", int)
    workers = _get(args, cfg, "workers", int, 1)
    spec = params.field

    if args.attack_kind == "tightness":
        target = _get(args, cfg, "target", lambda v: int(v, 16))
        tables = _load_or_search_tables(spec, args, cfg)
        text = adversary.serialize_tables(tables)
        jobs = [(spec.n, spec.poly, params.m, params.domain_bits,
                 params.first_committer, target, text, seed, lo, hi)
                for lo, hi in _chunks(trials, workers * 8 if workers > 1 else 1)]
        parts = _fanout(_tightness_chunk, jobs, workers)
        hits = sum(p[0] for p in parts)
        kept = sum(p[1] for p in parts)
        closed = adversary.tightness_success_probability(tables.q, params.m)
        cf = float(closed)
        sigma = math.sqrt(cf * (1 - cf) / kept) if kept else 0.0
        emp = hits / kept if kept else 0.0
        ok = abs(emp - cf) <= 3 * sigma
        print(f"attack=tightness n={spec.n} m={params.m} trials={trials} "
              f"conditioned={kept} hits={hits} empirical={emp:.6f} "
              f"closed_form={_frac(closed)} sigma={sigma:.6f} "
              f"pass={'true' if ok else 'false'}")
        return 0 if ok else 1

    value = _get(args, cfg, "value", lambda v: int(v, 16), 0)

    def family(target):
        return engine.HonestCommit(value), adversary.random_open_strategy()

    res = analysis.open_game_success(params, family, trials, seed,
                                     condition_nonzero=True)
    cf = 2.0 ** -spec.n
    sigma = res.sigma(cf)
    emp = float(res.rate)
    ok = abs(emp - cf) <= 3 * sigma
    print(f"attack=random-open n={spec.n} m={params.m} trials={trials} "
          f"conditioned={res.conditioned} hits={res.hits} empirical={emp:.6f} "
          f"closed_form=1/{spec.order} sigma={sigma:.6f} "
          f"pass={'true' if ok else 'false'}")
    return 0 if ok else 1


def cmd_analyze(args, cfg) -> int:
    metric = args.metric
    lines = []
    if metric == "p0p1":
        spec = _field(args, cfg)
        value = analysis.max_p0_plus_p1(spec)
        bound = 1 + Fraction(1, spec.order)
        lines.append(analysis.report_line("p0p1", spec.n, value, bound,
                                          value <= bound))
    elif metric == "sim-open":
        spec = _field(args, cfg)
        value = analysis.sim_open_epsilon(spec)
        bound = Fraction(1, spec.order)
        lines.append(analysis.report_line("sim-open", spec.n, value, bound,
                                          value <= bound))
    elif metric == "hiding":
        params = _params(args, cfg)
        spec = params.field
        worst = Fraction(0)
        from itertools import product
        for fixed in product(range(spec.order), repeat=params.m + 1):
            strat = analysis.fixed_challenge_strategy(fixed)
            for s1 in range(1, spec.order):
                worst = max(worst, analysis.hiding_distance(
                    params, strat, 0, s1, horizon=params.m))
        lines.append(analysis.report_line("hiding", spec.n, worst, Fraction(0),
                                          worst == 0))
    elif metric == "extractor":
        spec = _field(args, cfg)
        eps = Fraction(1, spec.order)
        alpha = Fraction(1, 2 ** (spec.n // 2)) if spec.n % 2 == 0 else None
        if alpha is None:
            raise SystemExit("error: extractor analysis uses even n (alpha = sqrt(eps))")
        bound = 2 * alpha
        openings = list(range(spec.order))
        worst = Fraction(0)
        from itertools import product
        for table in product(range(spec.order), repeat=spec.order):
            shat = analysis.fairly_binding_extractor(spec, table, openings, alpha)
            worst = max(worst, analysis.extractor_violation(spec, table, openings, shat))
        lines.append(analysis.report_line("extractor", spec.n, worst, bound,
                                          worst < bound))
    elif metric == "k":
        from .scheme import k_of_extr
        spec = _field(args, cfg)
        k = k_of_extr(spec)
        lines.append(analysis.report_line("k", spec.n, Fraction(k), Fraction(1),
                                          k == 1))
    elif metric == "coupling":
        trials = _get(args, cfg, "trials", int, 1000)
        seed = _get(args, cfg, "seed", int, 1)
        bad = 0
        for t in range(trials):
            u = engine.stream_u64(seed, engine.STREAM_TRIAL, t)
            p = _random_pmf(u, 0)
            q = _random_pmf(u, 1)
            j = analysis.couple_max_diagonal(p, q)
            good = (j.marginal(0) == p and j.marginal(1) == q
                    and analysis.cond_indep_given_neq(j)
                    and all(j.mass(k, k) == min(p.mass(k), q.mass(k))
                            for k in p.support | q.support))
            if not good:
                bad += 1
        lines.append(analysis.report_line("coupling", 0, Fraction(bad, trials),
                                          Fraction(0), bad == 0))
    else:
        raise SystemExit(f"error: unknown metric {metric!r}")
    code = 0
    for line in lines:
        print(line)
        if "pass=false" in line:
            code = 1
    return code


def _random_pmf(seed: int, which: int, size: int = 5) -> analysis.Dist:
    weights = [engine.stream_u64(seed, 0x70 + which, i) % 97 + (1 if i == 0 else 0)
               for i in range(size)]
    total = sum(weights)
    return analysis.Dist({i: Fraction(w, total) for i, w in enumerate(weights) if w})


def cmd_chsh_search(args, cfg) -> int:
    spec = _field(args, cfg)
    tables = _load_or_search_tables(spec, args, cfg)
    print(f"chsh-search n={spec.n} poly=0x{spec.poly:x} q={_frac(tables.q)}")
    return 0


def cmd_verify(args, cfg) -> int:
    try:
        with open(args.path) as fh:
            t = engine.parse_transcript(fh.read())
        k = getattr(args, "domain_bits", None)
        params = t.params if not k else SchemeParams(
            t.params.field, t.params.m, int(k), t.params.first_committer)
        outcome = multiround_verify(params, t.challenges(), t.responses(),
                                    t.final_opening())
    except (engine.TranscriptParseError, ValueError) as e:
        print(f"parse-error: {e}", file=sys.stderr)
        return 2
    spec = params.field
    fmt = lambda o: "BOT" if o is BOT else spec.to_hex(o)
    match = outcome == t.outcome
    print(f"outcome={fmt(outcome)} recorded={fmt(t.outcome)} "
          f"match={'true' if match else 'false'}")
    return 0 if match else 1


def cmd_serve(args, cfg) -> int:
    params = _params(args, cfg)
    seed = _get(args, cfg, "seed", int)
    deadline = _get(args, cfg, "deadline_ms", int, 1000)
    dl = net.DeadlineConfig(deadline,
                            _endpoint(_get(args, cfg, "p_endpoint", str)),
                            _endpoint(_get(args, cfg, "q_endpoint", str)))
    out = _outpath(getattr(args, "out", None) or cfg.get("out"))
    res = net.serve_verifier(params, dl, seed, out)
    if res.aborted:
        print(f"aborted reason=0x{res.abort_reason:02x}")
        return 1
    spec = params.field
    o = res.transcript.outcome
    print(f"outcome={'BOT' if o is BOT else spec.to_hex(o)}")
    return 0


def cmd_prove(args, cfg) -> int:
    params = _params(args, cfg)
    seed = _get(args, cfg, "seed", int)
    value = _get(args, cfg, "value", lambda v: int(v, 16), 0)
    role = _get(args, cfg, "role", str)
    ep = _endpoint(_get(args, cfg, "endpoint", str))
    return net.run_prover(role, params, seed, ep, value)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relcommit")
    ap.add_argument("--config", help="key=value file supplying defaults")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *names):
        if "n" in names:
            p.add_argument("--n", type=int)
            p.add_argument("--poly", help="reduction polynomial, hex")
        if "m" in names:
            p.add_argument("--m", type=int)
            p.add_argument("--domain-bits", dest="domain_bits")
            p.add_argument("--first-committer", dest="first_committer")
        if "seed" in names:
            p.add_argument("--seed", type=int)
        if "trials" in names:
            p.add_argument("--trials", type=int)
            p.add_argument("--workers", type=int)

    p = sub.add_parser("run", help="seeded honest sessions")
    common(p, "n", "m", "seed", "trials")
    p.add_argument("--value", help="committed value, hex")
    p.add_argument("--out", help="write the first trial's transcript here")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("attack", help="run an adversarial strategy")
    p.add_argument("attack_kind", choices=["tightness", "random-open"])
    common(p, "n", "m", "seed", "trials")
    p.add_argument("--target", help="value the attack opens toward, hex")
    p.add_argument("--value", help="honest committed value (random-open), hex")
    p.add_argument("--cache", help="directory for cached game tables")
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("analyze", help="exact definitional measurements")
    p.add_argument("metric", choices=["p0p1", "sim-open", "hiding",
                                      "extractor", "k", "coupling"])
    common(p, "n", "m", "seed", "trials")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("chsh-search", help="brute-force optimal game tables")
    common(p, "n")
    p.add_argument("--cache", help="directory for cached game tables")
    p.set_defaults(fn=cmd_chsh_search)

    p = sub.add_parser("verify", help="re-verify a recorded transcript")
    p.add_argument("path")
    p.add_argument("--domain-bits", dest="domain_bits")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("serve", help="networked verifier")
    common(p, "n", "m", "seed")
    p.add_argument("--deadline-ms", dest="deadline_ms", type=int)
    p.add_argument("--p-endpoint", dest="p_endpoint")
    p.add_argument("--q-endpoint", dest="q_endpoint")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("prove", help="networked honest prover")
    common(p, "n", "m", "seed")
    p.add_argument("--role", choices=["P", "Q"])
    p.add_argument("--endpoint")
    p.add_argument("--value", help="committed value, hex")
    p.set_defaults(fn=cmd_prove)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.fn(args, cfg)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"io-error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
