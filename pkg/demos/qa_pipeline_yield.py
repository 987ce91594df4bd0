"""Dry run of the degradation-sensitive QA construction pipeline.

Ten thousand synthetic candidates flow through the two gates with stub
judges: the filter keeps a question only if it is answered correctly from
the pristine video and incorrectly from the 200 kbps rendition, and an
independent verifier then has to reproduce the reference answer.  Stage
rates multiply into the overall yield.

Run:  python demos/qa_pipeline_yield.py
"""

import os

from uplinksim.qa_pipeline import (
    QaPipeline,
    VerdictLedger,
    preprocess_manifest,
    stub_judges,
    synth_manifest,
    write_manifest,
)

OUT = os.path.join(os.path.dirname(__file__), "out", "pipeline")
os.makedirs(OUT, exist_ok=True)

candidates = synth_manifest(10_000)
videos = preprocess_manifest(candidates)   # hook point for a real transcoder
print(f"{len(candidates)} candidates over {len(videos)} source videos")

judges = stub_judges(filter_accept_rate=0.2525, verify_accept_rate=0.8937, seed=0)
ledger = VerdictLedger(os.path.join(OUT, "ledger.jsonl"))
result = QaPipeline(judges, ledger=ledger).run(candidates)
ledger.close()
write_manifest(os.path.join(OUT, "manifest.jsonl"), candidates)

s = result.stats
print(f"\n{'stage':<16} {'count':>7} {'rate':>8}")
print(f"{'generated':<16} {s.n_generated:>7}")
print(f"{'filter accepted':<16} {s.n_filter_accepted:>7} {s.filter_rate:>8.4f}")
print(f"{'verified':<16} {s.n_verified:>7} {s.verify_rate:>8.4f}")
print(f"\noverall yield: {s.overall_rate:.4f} "
      f"(= {s.filter_rate:.4f} x {s.verify_rate:.4f}); parked: {s.n_parked}")
print(f"manifest and append-only ledger in {OUT}")
