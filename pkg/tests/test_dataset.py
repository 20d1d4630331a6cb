import json
import warnings

import numpy as np
import pytest

from glyphforge.config import PipelineConfig
from glyphforge.dataset import (
    AnnotationRecord,
    Instance,
    Lexicon,
    discover_backgrounds,
    icdar_line,
    manifest_digest,
    parse_icdar_file,
    synthesize_dataset,
    validate_dataset,
    write_icdar_annotations,
)
from glyphforge.errors import GlyphforgeError, InvalidArgumentError
from glyphforge.geometry import Quad
from glyphforge.glyphs import rasterize_quad_mask


@pytest.fixture(autouse=True)
def _quiet_class_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        yield


def synth(scene_dirs, lexicon_file, out_dir, count=5, seed=42, config=None):
    config = config or PipelineConfig()
    bg, aux = scene_dirs
    return synthesize_dataset(bg, aux, out_dir, Lexicon.load(lexicon_file), count, seed, config)


class TestLexicon:
    def test_dedup_and_digest(self, tmp_path):
        p = tmp_path / "lex.txt"
        p.write_text("cat\ndog\ncat\n\n dog \n", encoding="utf-8")
        lex = Lexicon.load(p)
        assert lex.words == ("cat", "dog")
        assert len(lex.source_digest) == 64

    def test_empty_rejected(self, tmp_path):
        p = tmp_path / "lex.txt"
        p.write_text("\n\n", encoding="utf-8")
        with pytest.raises(InvalidArgumentError):
            Lexicon.load(p)


class TestIcdarFormat:
    def test_line_format(self):
        quad = Quad.from_points([(0, 0), (10, 0), (10, 4), (0, 4)])
        assert icdar_line(quad, "ai") == "0,0,10,0,10,4,0,4,ai"

    def test_zero_instances_writes_empty_file(self, tmp_path):
        paths = write_icdar_annotations([AnnotationRecord("img_0", ())], tmp_path)
        assert paths[0].read_text() == ""

    def test_transcript_with_comma_round_trips(self, tmp_path):
        quad = Quad.from_points([(0, 0), (10, 0), (10, 4), (0, 4)])
        record = AnnotationRecord("img_1", (Instance(quad, "a,b", "built-in"),))
        path = write_icdar_annotations([record], tmp_path)[0]
        assert path.read_text() == "0,0,10,0,10,4,0,4,a,b\n"
        parsed = parse_icdar_file(path)
        assert parsed[0][1] == "a,b"

    def test_parse_rejects_short_line(self, tmp_path):
        p = tmp_path / "gt_bad.txt"
        p.write_text("1,2,3\n")
        with pytest.raises(InvalidArgumentError):
            parse_icdar_file(p)


class TestDiscoverBackgrounds:
    def test_pairing(self, scene_dirs, tmp_path):
        bg, aux = scene_dirs
        entries = discover_backgrounds(bg, aux)
        assert len(entries) == 3
        assert all(e.seg_path.exists() and e.depth_path.exists() for e in entries)

    def test_unpaired_background_skipped(self, scene_dirs):
        bg, aux = scene_dirs
        (bg / "orphan.png").write_bytes((bg / "bg_000.png").read_bytes())
        entries = discover_backgrounds(bg, aux)
        assert all(e.stem != "orphan" for e in entries)


class TestSynthesizeDataset:
    def test_determinism_same_seed(self, scene_dirs, lexicon_file, tmp_path):
        m1 = synth(scene_dirs, lexicon_file, tmp_path / "a", seed=42)
        m2 = synth(scene_dirs, lexicon_file, tmp_path / "b", seed=42)
        assert m1["digest"] == m2["digest"]
        for rec1, rec2 in zip(m1["records"], m2["records"]):
            assert rec1["image_sha256"] == rec2["image_sha256"]
            assert rec1["gt_sha256"] == rec2["gt_sha256"]

    def test_different_seed_different_digest(self, scene_dirs, lexicon_file, tmp_path):
        m1 = synth(scene_dirs, lexicon_file, tmp_path / "a", seed=42)
        m2 = synth(scene_dirs, lexicon_file, tmp_path / "b", seed=43)
        assert m1["digest"] != m2["digest"]

    def test_parallel_equals_serial(self, scene_dirs, lexicon_file, tmp_path):
        bg, aux = scene_dirs
        lex = Lexicon.load(lexicon_file)
        cfg = PipelineConfig()
        m1 = synthesize_dataset(bg, aux, tmp_path / "s", lex, 4, 7, cfg, jobs=1)
        m2 = synthesize_dataset(bg, aux, tmp_path / "p", lex, 4, 7, cfg, jobs=4)
        assert m1["digest"] == m2["digest"]

    def test_quads_in_bounds_and_transcripts_in_lexicon(self, scene_dirs, lexicon_file, tmp_path):
        m = synth(scene_dirs, lexicon_file, tmp_path / "out")
        words = set(Lexicon.load(lexicon_file).words)
        for record in m["records"]:
            for quad, transcript in parse_icdar_file(tmp_path / "out" / record["gt"]):
                arr = quad.array
                assert arr.min() >= 0 and arr[:, 0].max() <= 640 and arr[:, 1].max() <= 480
                assert transcript in words

    def test_instances_visibly_rendered(self, scene_dirs, lexicon_file, tmp_path):
        from glyphforge.imio import load_image

        bg_dir, _ = scene_dirs
        m = synth(scene_dirs, lexicon_file, tmp_path / "out", count=2)
        record = m["records"][0]
        out_img = load_image(tmp_path / "out" / record["image"])
        bg_img = load_image(bg_dir / f"{record['background']}.png")
        quads = [q for q, _ in parse_icdar_file(tmp_path / "out" / record["gt"])]
        for quad in quads:
            support = rasterize_quad_mask(quad, (640, 480)) > 0
            assert np.any(out_img[support] != bg_img[support])

    def test_no_backgrounds_is_error(self, tmp_path, lexicon_file):
        (tmp_path / "empty_bg").mkdir()
        (tmp_path / "empty_aux").mkdir()
        with pytest.raises(InvalidArgumentError):
            synthesize_dataset(
                tmp_path / "empty_bg",
                tmp_path / "empty_aux",
                tmp_path / "out",
                Lexicon.load(lexicon_file),
                1,
                0,
                PipelineConfig(),
            )

    def test_manifest_written_atomically(self, scene_dirs, lexicon_file, tmp_path):
        synth(scene_dirs, lexicon_file, tmp_path / "out")
        assert (tmp_path / "out" / "manifest.json").exists()
        assert not (tmp_path / "out" / "manifest.json.tmp").exists()


class TestValidateDataset:
    def test_fresh_dataset_passes(self, scene_dirs, lexicon_file, tmp_path):
        synth(scene_dirs, lexicon_file, tmp_path / "out")
        report = validate_dataset(tmp_path / "out")
        assert report["ok"]
        assert all(c["fail"] == 0 for c in report["checks"].values())

    def test_out_of_bounds_quad_fails_named_image(self, scene_dirs, lexicon_file, tmp_path):
        m = synth(scene_dirs, lexicon_file, tmp_path / "out", count=2)
        record = m["records"][0]
        gt_path = tmp_path / "out" / record["gt"]
        lines = gt_path.read_text().splitlines()
        parts = lines[0].split(",", 8)
        parts[0] = "-5000"
        parts[1] = "-5000"
        gt_path.write_text(",".join(parts) + "\n" + "\n".join(lines[1:]) + "\n")
        # re-stamp the hash so only geometry fails
        manifest_path = tmp_path / "out" / "manifest.json"
        manifest = json.loads(manifest_path.read_text())
        import hashlib

        for rec in manifest["records"]:
            if rec["image_id"] == record["image_id"]:
                rec["gt_sha256"] = hashlib.sha256(gt_path.read_bytes()).hexdigest()
        manifest["digest"] = manifest_digest(manifest)
        manifest_path.write_text(json.dumps(manifest))
        report = validate_dataset(tmp_path / "out")
        assert not report["ok"]
        assert any(record["image_id"] in f for f in report["checks"]["quad_geometry"]["failures"])

    def test_deleted_image_fails_pairing(self, scene_dirs, lexicon_file, tmp_path):
        m = synth(scene_dirs, lexicon_file, tmp_path / "out", count=2)
        (tmp_path / "out" / m["records"][0]["image"]).unlink()
        report = validate_dataset(tmp_path / "out")
        assert not report["ok"]
        assert report["checks"]["pairing"]["fail"] == 1

    def test_missing_manifest_is_error(self, tmp_path):
        with pytest.raises(GlyphforgeError):
            validate_dataset(tmp_path)


class TestWordSamplingUniformity:
    def test_uniform_within_5_sigma(self):
        # the sampler draws words via rng.integers(len(words)); check the
        # empirical frequencies over 100k draws
        words = [f"w{i}" for i in range(20)]
        rng = np.random.default_rng(2024)
        n = 100_000
        counts = np.bincount(rng.integers(len(words), size=n), minlength=len(words))
        p = 1 / len(words)
        sigma = np.sqrt(n * p * (1 - p))
        assert np.abs(counts - n * p).max() < 5 * sigma
