#!/usr/bin/env python3
"""Regenerates tests/fixtures/{pristine,corpus} from sample photographs that
ship with scikit-image, scikit-learn and matplotlib (all permissively
licensed). Every crop is 384x288 so both axes tile into 96-px NIQE patches.

Usage: python3 tools/make_fixtures.py [out_dir]
"""
import os
import sys

import matplotlib
import numpy as np
import skimage.data
import sklearn.datasets
from PIL import Image

SK = os.path.dirname(skimage.data.__file__)
SKL = os.path.join(os.path.dirname(sklearn.datasets.__file__), "images")
MPL = os.path.join(matplotlib.get_data_path(), "sample_data")

W, H = 384, 288

# (name, source file, crop origin x, crop origin y)
PRISTINE = [
    ("astronaut_tl", f"{SK}/astronaut.png", 0, 0),
    ("china_l", f"{SKL}/china.jpg", 0, 60),
    ("flower_l", f"{SKL}/flower.jpg", 0, 60),
    ("rocket_l", f"{SK}/rocket.jpg", 0, 60),
    ("moto_l_left", f"{SK}/motorcycle_left.png", 0, 100),
    ("moto_l_right", f"{SK}/motorcycle_left.png", 357, 100),
    ("hopper_top", f"{MPL}/grace_hopper.jpg", 64, 0),
    ("coffee_l", f"{SK}/coffee.png", 0, 56),
    ("camera_tl", f"{SK}/camera.png", 0, 0),
    ("brick", f"{SK}/brick.png", 64, 112),
    ("grass", f"{SK}/grass.png", 64, 112),
    ("gravel", f"{SK}/gravel.png", 64, 112),
]

CORPUS = [
    ("chelsea", f"{SK}/chelsea.png", 33, 6),
    ("coffee_r", f"{SK}/coffee.png", 216, 56),
    ("rocket_r", f"{SK}/rocket.jpg", 256, 100),
    ("china_r", f"{SKL}/china.jpg", 256, 100),
    ("flower_r", f"{SKL}/flower.jpg", 256, 100),
    ("moto_r", f"{SK}/motorcycle_right.png", 180, 150),
    ("astronaut_br", f"{SK}/astronaut.png", 128, 224),
    ("hopper_bottom", f"{MPL}/grace_hopper.jpg", 64, 312),
    ("coins", f"{SK}/coins.png", 0, 8),
    ("camera_br", f"{SK}/camera.png", 128, 224),
]


def emit(entries, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for name, src, x, y in entries:
        im = Image.open(src)
        im = im.convert("RGB") if im.mode not in ("L", "RGB") else im
        arr = np.asarray(im)
        crop = arr[y:y + H, x:x + W]
        assert crop.shape[:2] == (H, W), (name, crop.shape)
        Image.fromarray(crop).save(os.path.join(out_dir, name + ".png"), optimize=True)


def main():
    root = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "tests", "fixtures")
    emit(PRISTINE, os.path.join(root, "pristine"))
    emit(CORPUS, os.path.join(root, "corpus"))


if __name__ == "__main__":
    main()
