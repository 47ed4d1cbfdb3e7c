import subprocess

import numpy as np
import pytest
from PIL import Image

# 10 images across both classes with every split populated, enough for
# the consuming toolkit to train and evaluate on
DEFAULT_LAYOUT = {
    ("bona_fide", "bona_fide"): {"train": 3, "val": 1, "test": 1},
    ("attack", "replay"): {"train": 3, "val": 1, "test": 1},
}


def build_tree(root, layout=DEFAULT_LAYOUT, size=(48, 48), seed=0):
    """Populate root with deterministic noise PNGs; returns their paths."""
    rng = np.random.default_rng(seed)
    paths = []
    for (cls, species), splits in sorted(layout.items()):
        for split, count in sorted(splits.items()):
            split_dir = root / cls / species / split
            split_dir.mkdir(parents=True, exist_ok=True)
            for i in range(count):
                pixels = rng.integers(0, 256, size + (3,), dtype=np.uint8)
                path = split_dir / f"img{i:02d}.png"
                Image.fromarray(pixels, "RGB").save(path)
                paths.append(path)
    return paths


@pytest.fixture
def tree(tmp_path):
    root = tmp_path / "images"
    build_tree(root)
    return root


def run_cli(*args):
    return subprocess.run(
        ["embed-export", *map(str, args)], capture_output=True, text=True
    )


def run_padbench(*args):
    return subprocess.run(
        ["padbench", *map(str, args)], capture_output=True, text=True
    )
