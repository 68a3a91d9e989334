import json
from pathlib import Path

CACHE_DIR = Path(__file__).resolve().parent.parent / "bench_results"


def cell_outcomes(case_id, dc, md, method, reps, seed=0):
    """Seeded benchmark cell with an incremental on-disk cache.

    Replicates are fully determined by (case, dc, md, method, seed,
    replicate index), so cached rows are bitwise equivalent to a fresh
    run; missing rows are computed and appended, which lets interrupted
    runs resume.
    """
    from seqdisc.bench import run_replicate

    CACHE_DIR.mkdir(exist_ok=True)
    path = CACHE_DIR / f"case{case_id}_{dc}_{md}_{method}_s{seed}.jsonl"
    done = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                row = json.loads(line)
                done[row["replicate"]] = row
    for r in range(reps):
        if r in done:
            continue
        try:
            outcome, rounds, _ = run_replicate(case_id, dc, md, method, seed, r)
            row = {"replicate": r, "outcome": outcome, "rounds": rounds}
        except Exception as exc:  # infrastructure failure, excluded from rates
            row = {"replicate": r, "outcome": "crash", "error": repr(exc)}
        with open(path, "a") as fh:
            fh.write(json.dumps(row) + "\n")
        done[r] = row
    rows = [done[r] for r in range(reps) if done[r]["outcome"] != "crash"]
    outcomes = [row["outcome"] for row in rows]
    rounds = [row["rounds"] for row in rows]
    return outcomes, rounds
