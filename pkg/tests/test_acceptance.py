"""Acceptance suite.

One test per criterion; each prints a single PASS/FAIL line (run with
``pytest -s`` to see them live) and fails the build on any violated check.
The heavy sweeps share one session-scoped cache of aggregated points, all
at 30 replications on the default master seed.
"""

import dataclasses
import os
import time

import numpy as np
import pytest
from scipy import stats

from tetrasds import cli, metrics, traffic
from tetrasds.config import ScenarioConfig
from tetrasds.kernel import run_kernel
from tetrasds.run import run_point, simulate
from tetrasds.scenario import build_scenario
from tetrasds.tdma import (
    CONTROL_FRAME,
    SUBSLOT_DURATION_S,
    SUBSLOTS_PER_FRAME,
    frame_of_index,
    index_at_or_after,
    time_of_index,
)
from tetrasds.traffic import KIND_REPORT

REPLICATIONS = 30
JOBS = max(1, min(4, os.cpu_count() or 1))

BASE = dataclasses.replace(ScenarioConfig(), replications=REPLICATIONS)

_cache: dict = {}


def point(**overrides) -> metrics.Aggregate:
    key = tuple(sorted(overrides.items()))
    if key not in _cache:
        cfg = dataclasses.replace(BASE, **overrides)
        _cache[key] = metrics.aggregate(run_point(cfg, jobs=JOBS), cfg.confidence)
    return _cache[key]


def report(criterion: str, checks: list[tuple[str, bool, str]]) -> None:
    ok = all(passed for _, passed, _ in checks)
    details = "; ".join(f"{name} {'ok' if passed else 'VIOLATED'} ({info})" for name, passed, info in checks)
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {details}")
    failed = [f"{name}: {info}" for name, passed, info in checks if not passed]
    assert not failed, f"criterion {criterion} violated: " + " | ".join(failed)


# -- criterion 1: determinism and oracle suite ------------------------------


def _random_small_config(gen: np.random.Generator) -> ScenarioConfig:
    return dataclasses.replace(
        ScenarioConfig(),
        n_responders=int(gen.integers(1, 6)),
        n_background=int(gen.integers(0, 12)),
        lambda_report_per_s=float(gen.uniform(0.05, 0.4)),
        model=str(gen.choice(["RA", "TU", "HT"])),
        holding_timer_mode=str(gen.choice(["none", "auto"])),
        wt_frames=int(gen.integers(1, 8)),
        nu_max=int(gen.integers(1, 8)),
        length_multiframes=int(gen.integers(40, 90)),
        warmup_multiframes=int(gen.integers(0, 10)),
        master_seed=int(gen.integers(0, 2**31)),
        replications=2,
    )


def test_criterion_1_determinism_and_oracles():
    t0 = time.time()
    checks = []

    # (a) peak-age samples match a per-flow brute-force replay
    gen = np.random.default_rng(20240101)
    mismatches = 0
    for _ in range(10):
        cfg = _random_small_config(gen)
        sc = build_scenario(cfg, 0)
        raw = run_kernel(sc)
        rep_ids = raw.delivered_ids[sc.m_kind[raw.delivered_ids] == KIND_REPORT]
        closes = raw.delivered_close[sc.m_kind[raw.delivered_ids] == KIND_REPORT]
        production = metrics.paoi_pooled(sc.m_station, sc.m_gen, rep_ids, closes, sc.warmup_end_s)
        # independent replay: walk each flow's stored timeline directly
        replay = []
        for flow in sorted(set(sc.m_station[rep_ids].tolist())):
            mask = sc.m_station[rep_ids] == flow
            order = np.argsort(closes[mask], kind="stable")
            flow_gens = sc.m_gen[rep_ids[mask][order]]
            flow_closes = closes[mask][order]
            samples = metrics.paoi_from_timeline(flow_gens, flow_closes)
            keep = flow_gens[1:] >= sc.warmup_end_s
            replay.extend(samples[keep])
        if not np.array_equal(production, np.array(replay)):
            mismatches += 1
    checks.append(("paoi-replay", mismatches == 0, f"{mismatches}/10 scenarios mismatched"))

    # (b) error-free single-responder pipeline against a hand-computed walk;
    # the access-alignment randomization is disabled so the closed form from
    # the subslot arithmetic applies
    cfg = dataclasses.replace(
        ScenarioConfig(),
        n_responders=1,
        n_background=0,
        lambda_feedback_per_s=0.0,
        lambda_report_per_s=0.1,
        perfect_channel=True,
        alignment_frames=0,
        wt_frames=5,
        nu_max=5,
        warmup_multiframes=0,
        replications=2,
    )
    sc = build_scenario(cfg, 0)
    raw = run_kernel(sc)

    def next_payload(g):
        while frame_of_index(g) == CONTROL_FRAME:
            g += 1
        return g

    def oracle(gen_t, busy_after):
        g0 = next_payload(max(index_at_or_after(gen_t), busy_after + 1))
        grant = next_payload(((g0 // SUBSLOTS_PER_FRAME) + 1) * SUBSLOTS_PER_FRAME)
        frag = ((grant // SUBSLOTS_PER_FRAME) + 1) * SUBSLOTS_PER_FRAME
        for _ in range(8):
            frag = next_payload(frag)
            last = frag
            frag += 1
        ack = next_payload(last + 1)
        return time_of_index(ack) + SUBSLOT_DURATION_S, ack

    close_by_id = dict(zip(raw.delivered_ids.tolist(), raw.delivered_close.tolist()))
    busy = -1
    worst = 0.0
    undelivered_early = 0
    for i in range(sc.n_messages):
        expected_close, busy = oracle(sc.m_gen[i], busy)
        if i in close_by_id:
            worst = max(worst, abs(close_by_id[i] - expected_close))
        elif sc.m_gen[i] < sc.horizon_s - 2.0:
            undelivered_early += 1
    checks.append(("all-delivered", undelivered_early == 0 and len(raw.dropped_ids) == 0,
                   f"{undelivered_early} undelivered, {len(raw.dropped_ids)} dropped"))
    checks.append(("min-service-delay", worst <= SUBSLOT_DURATION_S + 1e-12,
                   f"worst deviation {worst * 1e3:.3f} ms vs one subslot {SUBSLOT_DURATION_S * 1e3:.3f} ms"))
    zero_retries = (
        raw.counters["access_attempts"] == raw.counters["access_successes"]
        and raw.counters["access_collision_slots"] == 0
    )
    checks.append(("zero-retries", zero_retries,
                   f"{raw.counters['access_attempts']} attempts, {raw.counters['access_successes']} successes"))

    # (c) byte-identical CSVs for identical seeds
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        args = ["--quiet", "--set", "run.length_multiframes=40", "--set", "run.warmup_multiframes=2",
                "--set", "run.replications=3", "--set", "traffic.n_responders=2",
                "--set", "traffic.n_background=5", "--seed", "11"]
        a, b = os.path.join(tmp, "a.csv"), os.path.join(tmp, "b.csv")
        assert cli.main(["--out", a, *args]) == 0
        assert cli.main(["--out", b, *args]) == 0
        same = open(a, "rb").read() == open(b, "rb").read()
    checks.append(("byte-identical-csv", same, "two runs, one seed"))
    checks.append(("runtime", time.time() - t0 < 60.0, f"{time.time() - t0:.1f} s"))
    report("1 determinism-and-oracles", checks)


# -- criterion 2: statistical generators ------------------------------------


def test_criterion_2_statistical_generators():
    t0 = time.time()
    checks = []
    gen = np.random.default_rng(77)
    for name, rate in (("lambda_c", 10 / 3600), ("lambda_voice", 3 / 3600), ("lambda_F(10)", 10 / 60)):
        draws = traffic.sample_interarrival(rate, gen, n=10**6)
        mean = float(np.mean(draws))
        tol = 3.0 * (1 / rate) / 1000.0
        checks.append((f"poisson-{name}", abs(mean - 1 / rate) < tol,
                       f"mean {mean:.2f} vs {1 / rate:.2f} +-{tol:.2f}"))
    durations = np.array([traffic.generate_voice_call(0, 0.0, gen).duration_s for _ in range(200_000)])
    ks = stats.kstest(durations, stats.uniform(loc=20.0, scale=20.0).cdf)
    checks.append(("voice-uniform-ks", ks.pvalue > 0.01, f"KS p={ks.pvalue:.3f}"))
    checks.append(("voice-bounds", bool((durations.min() >= 20.0) and (durations.max() <= 40.0)),
                   f"[{durations.min():.2f}, {durations.max():.2f}]"))
    checks.append(("runtime", time.time() - t0 < 60.0, f"{time.time() - t0:.1f} s"))
    report("2 statistical-generators", checks)


# -- criterion 3: delay trends over the population sweep ---------------------


def test_criterion_3_delay_trends():
    checks = []
    delays = {}
    for nf in (5, 10, 50):
        row = [point(n_responders=nf, n_background=nc).delay_mean_s for nc in (100, 200, 300, 400, 500)]
        delays[nf] = row
        checks.append((f"monotone-NF{nf}", all(a < b for a, b in zip(row, row[1:])),
                       "ms: " + ",".join(str(round(x * 1e3)) for x in row)))
    f_nf = delays[10][1] / delays[5][1] - 1.0
    f_nc = delays[5][3] / delays[5][1] - 1.0
    checks.append(("factor-NF-window", 0.33 <= f_nf <= 0.83, f"{f_nf * 100:.1f}% vs 58+-25"))
    checks.append(("factor-NC-window", 0.09 <= f_nc <= 0.59, f"{f_nc * 100:.1f}% vs 34+-25"))
    checks.append(("NF-raises-more-than-NC", f_nf > f_nc, f"{f_nf * 100:.1f}% vs {f_nc * 100:.1f}%"))
    report("3 delay-trends", checks)


# -- criterion 4: waiting-time and attempt-limit trends ----------------------


def test_criterion_4_wt_nu_trends():
    checks = []
    wt_row = [point(n_responders=10, n_background=400, wt_frames=w).delay_mean_s for w in (5, 10, 15)]
    nu_row = [point(n_responders=10, n_background=400, nu_max=n).delay_mean_s for n in (5, 10, 15)]
    checks.append(("monotone-WT", wt_row[0] < wt_row[1] < wt_row[2],
                   "ms: " + ",".join(str(round(x * 1e3)) for x in wt_row)))
    checks.append(("monotone-Nu", nu_row[0] < nu_row[1] < nu_row[2],
                   "ms: " + ",".join(str(round(x * 1e3)) for x in nu_row)))
    wt_f = wt_row[1] / wt_row[0] - 1.0
    nu_f = nu_row[1] / nu_row[0] - 1.0
    checks.append(("WT-window", 0.03 <= wt_f <= 0.53, f"{wt_f * 100:.1f}% vs 28+-25"))
    checks.append(("Nu-window", 0.47 <= nu_f <= 0.97, f"{nu_f * 100:.1f}% vs 72+-25"))
    checks.append(("Nu-exceeds-WT", nu_f > wt_f, f"{nu_f * 100:.1f}% vs {wt_f * 100:.1f}%"))
    report("4 wt-nu-trends", checks)


# -- criterion 5: propagation-environment ordering ---------------------------


def test_criterion_5_propagation_ordering():
    checks = []
    fails = {}
    for model in ("RA", "TU", "HT"):
        fails[model] = [
            point(n_responders=10, n_background=nc, model=model).failure_mean
            for nc in (100, 200, 300, 400, 500)
        ]
    ordered = all(fails["RA"][i] < fails["TU"][i] < fails["HT"][i] for i in range(5))
    detail = "; ".join(
        f"NC{nc}: {fails['RA'][i]:.4f}<{fails['TU'][i]:.4f}<{fails['HT'][i]:.4f}"
        for i, nc in enumerate((100, 200, 300, 400, 500))
    )
    checks.append(("ordering-every-NC", ordered, detail))
    gap = fails["HT"][3] / fails["RA"][3] - 1.0
    checks.append(("HT-vs-RA-gap@400", gap >= 0.30, f"{gap * 100:.0f}% vs >=30%"))
    report("5 propagation-ordering", checks)


# -- criterion 6: calibration point ------------------------------------------


def test_criterion_6_calibration_point():
    agg = point(n_responders=10, n_background=100)
    checks = [
        ("delay-band", 0.280 <= agg.delay_mean_s <= 0.840, f"{agg.delay_mean_s * 1e3:.0f} ms vs 560+-50%"),
        ("failure-bound", agg.failure_mean < 0.15, f"{agg.failure_mean:.4f} vs <0.15"),
    ]
    report("6 calibration-point", checks)


# -- criterion 7: peak-age and the holding timer -----------------------------


def test_criterion_7_paoi_holding_timer():
    checks = []
    lambdas = (0.05, 0.1, 0.15, 0.2, 0.25)
    for nf in (10, 50):
        row = [
            point(n_responders=nf, n_background=500, lambda_report_per_s=lam, holding_timer_mode="auto").paoi_mean_s
            for lam in lambdas
        ]
        checks.append((f"non-increasing-NF{nf}", all(a >= b for a, b in zip(row, row[1:])),
                       "s: " + ",".join(f"{x:.1f}" for x in row)))
        checks.append((f"below-minute-NF{nf}", max(row) < 60.0, f"max {max(row):.1f} s"))
        on = row[-1]
        off = point(n_responders=nf, n_background=500, lambda_report_per_s=0.25).paoi_mean_s
        checks.append((f"timer-gain-NF{nf}", off >= 2.0 * on, f"off {off:.1f} s vs 2x on {on:.1f} s"))
    report("7 paoi-holding-timer", checks)


# -- criterion 8: state machine and conservation ------------------------------


def test_criterion_8_state_machine_and_conservation():
    from machine_enum import enumerate_against_document

    checks = []
    missing, mismatched = enumerate_against_document()
    checks.append(("transition-table", not missing and not mismatched,
                   f"{len(missing)} uncovered, {len(mismatched)} mismatched rows"))
    violations = 0
    runs = 0
    for overrides in (
        dict(n_responders=3, n_background=10, length_multiframes=60, warmup_multiframes=3),
        dict(n_responders=5, n_background=30, model="HT", holding_timer_mode="auto",
             lambda_report_per_s=0.3, length_multiframes=60, warmup_multiframes=3),
        dict(n_responders=2, n_background=0, perfect_channel=True, length_multiframes=60,
             warmup_multiframes=0),
    ):
        cfg = dataclasses.replace(BASE, replications=3, **overrides)
        for rep in range(cfg.replications):
            sc, raw = simulate(cfg, rep)
            from tetrasds.run import summarize

            s = summarize(sc, raw)
            runs += 1
            if s.n_generated != s.n_delivered + s.n_dropped + s.n_pending or s.n_pending < 0:
                violations += 1
    checks.append(("conservation", violations == 0, f"{violations}/{runs} runs violated"))
    report("8 state-machine-and-conservation", checks)
