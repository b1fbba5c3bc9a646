from pathlib import Path

import cv2
import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


def toy_class_image(class_name: str, index: int, size: int = 160) -> np.ndarray:
    """Deterministic textured image; texture family differs per class."""
    rng = np.random.default_rng(abs(hash((class_name, index))) % (2**32))
    img = rng.integers(0, 255, size=(size, size), dtype=np.uint8)
    img = cv2.GaussianBlur(img, (0, 0), 1.5)
    if class_name == "rings":
        for _ in range(10):
            c = (int(rng.integers(10, size - 10)), int(rng.integers(10, size - 10)))
            cv2.circle(img, c, int(rng.integers(6, 24)), int(rng.integers(0, 255)), 2)
    elif class_name == "checks":
        step = int(rng.integers(10, 18))
        for y in range(0, size, step):
            for x in range(0, size, step):
                if (x // step + y // step) % 2 == 0:
                    shade = int(rng.integers(0, 255))
                    cv2.rectangle(img, (x, y), (x + step, y + step), shade, -1)
    else:  # spots
        for _ in range(14):
            c = (int(rng.integers(10, size - 10)), int(rng.integers(10, size - 10)))
            axes = (int(rng.integers(4, 16)), int(rng.integers(4, 16)))
            cv2.ellipse(img, c, axes, 0, 0, 360, int(rng.integers(0, 255)), -1)
    return img


@pytest.fixture(scope="session")
def bundled_photo() -> Path:
    path = DATA_DIR / "photo.png"
    assert path.exists(), "bundled test photo missing"
    return path


@pytest.fixture(scope="session")
def toy_photo_tree(tmp_path_factory) -> Path:
    """3-class image folder: 4 training-quality photos per class."""
    root = tmp_path_factory.mktemp("photos")
    for cls in ("rings", "checks", "spots"):
        class_dir = root / cls
        class_dir.mkdir()
        for i in range(4):
            cv2.imwrite(str(class_dir / f"{cls}{i}.png"), toy_class_image(cls, i))
    return root
