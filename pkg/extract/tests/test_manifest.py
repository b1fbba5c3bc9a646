import json

import numpy as np
import pytest

from fbextract.extraction import ExtractionJob, run_job
from fbextract.fbds import write_fbds
from fbextract.manifest import ManifestError, build_manifest


@pytest.fixture(scope="module")
def extracted_tree(toy_photo_tree, tmp_path_factory):
    out = tmp_path_factory.mktemp("descs")
    run_job(ExtractionJob(input_dir=toy_photo_tree, output_dir=out))
    return out


class TestBuildManifest:
    def test_three_class_tree(self, extracted_tree):
        path = build_manifest(extracted_tree, seed=1, test_fraction=0.25)
        doc = json.loads(path.read_text())
        assert doc["format"] == "fuzzyboost-manifest"
        assert doc["classes"] == ["checks", "rings", "spots"]
        assert doc["dimensionality"] == 128
        assert len(doc["images"]) == 12
        splits = {i["split"] for i in doc["images"]}
        assert splits == {"train", "test"}

    def test_each_class_keeps_both_splits(self, extracted_tree, tmp_path):
        path = build_manifest(extracted_tree, tmp_path / "m.json", seed=3, test_fraction=0.25)
        doc = json.loads(path.read_text())
        for cls in doc["classes"]:
            splits = {i["split"] for i in doc["images"] if i["class"] == cls}
            assert splits == {"train", "test"}

    def test_deterministic_given_seed(self, extracted_tree, tmp_path):
        a = build_manifest(extracted_tree, tmp_path / "a.json", seed=9)
        b = build_manifest(extracted_tree, tmp_path / "b.json", seed=9)
        assert json.loads(a.read_text())["images"] == json.loads(b.read_text())["images"]

    def test_paths_relative_to_manifest(self, extracted_tree, tmp_path):
        path = build_manifest(extracted_tree, seed=0)
        doc = json.loads(path.read_text())
        for entry in doc["images"]:
            assert not entry["path"].startswith("/")
            assert (path.parent / entry["path"]).exists()

    def test_empty_class_folder_named(self, tmp_path):
        (tmp_path / "full").mkdir()
        write_fbds(np.ones((2, 8), dtype=np.float32), tmp_path / "full" / "a.fbds")
        (tmp_path / "hollow").mkdir()
        with pytest.raises(ManifestError, match="hollow"):
            build_manifest(tmp_path)

    def test_dimensionality_disagreement(self, tmp_path):
        (tmp_path / "a").mkdir()
        write_fbds(np.ones((2, 8), dtype=np.float32), tmp_path / "a" / "x.fbds")
        (tmp_path / "b").mkdir()
        write_fbds(np.ones((2, 16), dtype=np.float32), tmp_path / "b" / "y.fbds")
        with pytest.raises(ManifestError, match="dimensionality"):
            build_manifest(tmp_path)

    def test_fraction_bounds(self, extracted_tree):
        with pytest.raises(ManifestError):
            build_manifest(extracted_tree, test_fraction=0.0)
