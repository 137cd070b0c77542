"""Constructed simulation profiles shared by several tests."""

from graphtrf.client import SimCell, SimProfile
from graphtrf.graph import TaskKind
from graphtrf.render import TRF_ORDER, TrfKind

# one preferred TRF per task: visual for the perception-heavy tasks,
# textual for the weighted and ordering tasks
SEPARABLE_BEST = {
    TaskKind.CONN: TrfKind.VNEATO,
    TaskKind.CYC: TrfKind.VSFDP,
    TaskKind.BGM: TrfKind.VDOT,
    TaskKind.TS: TrfKind.TSET,
    TaskKind.SP: TrfKind.TLIST,
    TaskKind.MF: TrfKind.TMAT,
    TaskKind.HP: TrfKind.TLIST,
}


def separable_profile() -> SimProfile:
    """The preferred TRF always answers correctly in 9 tokens; every other TRF
    is a coin flip at 400 tokens, so its GRE can never reach the preferred one."""
    cells = {}
    for task, best in SEPARABLE_BEST.items():
        for trf in TRF_ORDER:
            cells[(task, trf)] = SimCell(1.0, 9.0) if trf is best else SimCell(0.5, 400.0, 40.0)
    return SimProfile(cells, name="separable")


def heterogeneous_profile() -> SimProfile:
    """Noisy cells where the best TRF differs by task, so every TRF is beaten
    somewhere and no TRF wins everywhere."""
    cells = {}
    tasks = list(SEPARABLE_BEST)
    for ti, task in enumerate(tasks):
        for fi, trf in enumerate(TRF_ORDER):
            lead = (fi - ti) % len(TRF_ORDER)
            acc = 0.9 - 0.08 * lead
            tok = 30.0 + 25.0 * ((fi * 3 + ti) % 5)
            cells[(task, trf)] = SimCell(acc, tok, 0.3 * tok)
    return SimProfile(cells, name="heterogeneous")


def simulated_trfp(tmp_path, profile, per_task, seed, k=3, alpha=0.5, name="probe"):
    """Probe a generated dataset against ``profile`` and return (instances, stats, examples)."""
    from graphtrf.generate import gen_dataset
    from graphtrf.graph import GenConfig
    from graphtrf.metrics import GreParams
    from graphtrf.probe import Journal, Prober, build_trfp, stats_from_records
    from graphtrf.client import SimClient

    insts = gen_dataset(list(SEPARABLE_BEST), per_task, GenConfig(seed=seed))
    params = GreParams(alpha=alpha, k=k)
    journal = Journal(tmp_path / f"{name}-{seed}.jsonl")
    Prober(SimClient(profile), journal, params, seed=seed).run(insts)
    recs = journal.records()
    return insts, stats_from_records(recs, k), build_trfp(insts, recs, params)
