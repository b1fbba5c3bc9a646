import numpy as np
import pytest

from fbextract.extraction import ExtractionError, ExtractionJob, extract_image, run_job
from fbextract.fbds import DescriptorFileError, read_fbds, read_fbds_header, write_fbds


class TestFbdsFormat:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = rng.normal(size=(40, 128)).astype(np.float32)
        path = tmp_path / "x.fbds"
        write_fbds(arr, path)
        assert (read_fbds(path) == arr).all()
        assert read_fbds_header(path) == (128, 40)

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(DescriptorFileError):
            write_fbds(np.empty((0, 128), dtype=np.float32), tmp_path / "e.fbds")

    def test_non_finite_rejected(self, tmp_path):
        arr = np.ones((2, 4), dtype=np.float32)
        arr[0, 0] = np.nan
        with pytest.raises(DescriptorFileError):
            write_fbds(arr, tmp_path / "n.fbds")

    def test_bad_magic_detected(self, tmp_path):
        path = tmp_path / "bad.fbds"
        path.write_bytes(b"JUNKJUNKJUNKJUNK")
        with pytest.raises(DescriptorFileError):
            read_fbds_header(path)


class TestExtractImage:
    def test_photo_yields_sift_descriptors(self, bundled_photo, tmp_path):
        out = tmp_path / "photo.fbds"
        count = extract_image(bundled_photo, out)
        n, stored = read_fbds_header(out)
        assert n == 128
        assert stored == count >= 50

    def test_extraction_is_deterministic(self, bundled_photo, tmp_path):
        a, b = tmp_path / "a.fbds", tmp_path / "b.fbds"
        extract_image(bundled_photo, a)
        extract_image(bundled_photo, b)
        assert a.read_bytes() == b.read_bytes()

    def test_keypoint_cap(self, bundled_photo, tmp_path):
        out = tmp_path / "capped.fbds"
        extract_image(bundled_photo, out, max_keypoints=60)
        # OpenCV may retain a couple extra keypoints at equal response scores
        assert read_fbds_header(out)[1] <= 70

    def test_blank_image_rejected(self, tmp_path):
        import cv2

        blank = tmp_path / "blank.png"
        cv2.imwrite(str(blank), np.full((96, 96), 200, dtype=np.uint8))
        with pytest.raises(ExtractionError, match="no keypoints"):
            extract_image(blank, tmp_path / "out.fbds")

    def test_undecodable_image_rejected(self, tmp_path):
        bogus = tmp_path / "not-an-image.png"
        bogus.write_bytes(b"definitely not a png")
        with pytest.raises(ExtractionError, match="decode"):
            extract_image(bogus, tmp_path / "out.fbds")


class TestRunJob:
    def test_mirrors_class_layout(self, toy_photo_tree, tmp_path):
        out = tmp_path / "descs"
        summary = run_job(ExtractionJob(input_dir=toy_photo_tree, output_dir=out))
        assert not summary.skipped
        assert len(summary.written) == 12
        for cls in ("rings", "checks", "spots"):
            assert len(list((out / cls).glob("*.fbds"))) == 4

    def test_bad_images_listed_in_summary(self, toy_photo_tree, tmp_path, caplog):
        import shutil

        broken_tree = tmp_path / "photos"
        shutil.copytree(toy_photo_tree, broken_tree)
        (broken_tree / "rings" / "broken.png").write_bytes(b"nope")
        summary = run_job(ExtractionJob(input_dir=broken_tree, output_dir=tmp_path / "d"))
        assert len(summary.skipped) == 1
        assert "broken.png" in str(summary.skipped[0][0])
        assert len(summary.written) == 12

    def test_job_validation(self, tmp_path):
        with pytest.raises(ExtractionError, match="does not exist"):
            ExtractionJob(input_dir=tmp_path / "missing", output_dir=tmp_path)
        with pytest.raises(ExtractionError, match="unsupported detector"):
            ExtractionJob(input_dir=tmp_path, output_dir=tmp_path, detector="orb9000")
