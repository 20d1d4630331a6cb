"""Background preparation: synthesize, erase, evaluate.

Backgrounds must be text-free before we place our own text on them, or
the annotations would miss the pre-existing writing. The pipeline asks a
text-to-image service for candidates, loops OCR-detect -> mask -> inpaint
until no text remains (or an iteration cap), then gates each image on a
no-reference quality score. Everything here runs against the bundled mock
expert server over real HTTP.
"""

import json

from glyphforge.background import HttpExpertClient, run_background_pipeline

from _shared import out_dir

out = out_dir("05_backgrounds")
prompts = [
    "a clean brick wall in afternoon light",
    "empty billboard by a highway",
    "a shopfront with a blank sign",
]

from glyphforge.mock_experts import MockExpertServer

# script the OCR: first pass sees a leftover word, the repaired image is clean
leftover = {
    "quad": [[40, 40], [140, 40], [140, 70], [40, 70]],
    "transcript": "SALE",
    "confidence": 0.93,
}
with MockExpertServer(ocr_script=[[leftover], []]) as server:
    print(f"expert services at {server.endpoint} (/t2i /ocr /inpaint /quality)\n")
    clients = HttpExpertClient(server.endpoint).as_clients()
    records = run_background_pipeline(prompts, clients, out)

for record in records:
    print(f"prompt: {record.provenance!r}")
    print(
        f"  verdict={record.verdict}  erase iterations={record.erase_iterations}  "
        f"residual text={record.residual_text_count}  quality={record.quality_score:.3f}"
    )

accepted = sum(r.verdict == "accepted" for r in records)
print(f"\n{accepted}/{len(prompts)} accepted; per-image audit trail in backgrounds.jsonl:")
first = (out / "backgrounds.jsonl").read_text().splitlines()[0]
print(json.dumps(json.loads(first), indent=2))
print(f"wrote {out}/")
