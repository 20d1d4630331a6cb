"""End to end: synthesize a dataset, validate it, score detections.

One call turns a pool of text-free backgrounds (plus segmentation and
depth sidecars) into annotated training images: ICDAR-style ground truth,
a content-hashed manifest, full determinism from the seed. The metrics
half then scores a deliberately degraded copy of the ground truth against
the original, exercising polygon-IoU matching and normalized edit distance.
"""

import shutil

import numpy as np

from glyphforge.config import PipelineConfig
from glyphforge.dataset import Lexicon, parse_icdar_file, synthesize_dataset, validate_dataset
from glyphforge.geometry import Quad
from glyphforge.metrics import RecogPair, detection_prf, one_minus_ned

from _shared import out_dir, write_scene

root = out_dir("06_dataset")
shutil.rmtree(root)
root.mkdir()
bg_dir, aux_dir = write_scene(root)
lex = root / "lexicon.txt"
lex.write_text("\n".join(["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"]) + "\n")

import warnings

warnings.filterwarnings("ignore", message="allowed class")

print("== synthesis ==")
cfg = PipelineConfig()
manifest = synthesize_dataset(bg_dir, aux_dir, root / "ds", Lexicon.load(lex), 8, 42, cfg)
g = manifest["global"]
print(f"{g['images']} images, {g['instances']} instances, manifest digest {manifest['digest'][:16]}…")

again = synthesize_dataset(bg_dir, aux_dir, root / "ds2", Lexicon.load(lex), 8, 42, cfg)
print(f"same seed reproduces the digest: {again['digest'] == manifest['digest']}")

report = validate_dataset(root / "ds")
print(f"validator: ok={report['ok']}  " + "  ".join(
    f"{name}={c['pass']}/{c['pass'] + c['fail']}" for name, c in report["checks"].items()
))

print("\n== metrics on degraded predictions ==")
rng = np.random.default_rng(0)
tp = fp = fn = 0
pairs = []
for record in manifest["records"]:
    gts = parse_icdar_file(root / "ds" / record["gt"])
    preds = []
    for quad, transcript in gts:
        if rng.random() < 0.25:  # drop a quarter of the boxes
            continue
        shifted = Quad.from_points(quad.array + rng.uniform(-3, 3, size=(4, 2)))
        preds.append(shifted)
        # recognition with an occasional one-character error
        guess = transcript if rng.random() < 0.7 else transcript[:-1] + "?"
        pairs.append(RecogPair(prediction=guess, ground_truth=transcript))
    result = detection_prf(preds, [q for q, _ in gts], iou_threshold=0.5)
    tp, fp, fn = tp + result.tp, fp + result.fp, fn + result.fn

precision = tp / (tp + fp)
recall = tp / (tp + fn)
print(f"detection: precision={precision:.3f} recall={recall:.3f} (boxes jittered ±3 px, 25% dropped)")
mean_ned = sum(one_minus_ned(p.prediction, p.ground_truth) for p in pairs) / len(pairs)
exact = sum(p.prediction == p.ground_truth for p in pairs) / len(pairs)
print(f"recognition: accuracy={exact:.3f} mean 1-NED={mean_ned:.3f} over {len(pairs)} words")
print(f"wrote {root}/")
