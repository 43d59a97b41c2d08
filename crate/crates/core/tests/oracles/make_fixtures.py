"""Writes the natural-image fixtures (downscaled crops of scikit-image's
public-domain / CC0 sample photos) used by the edge and SSIM tests."""
import pathlib

import numpy as np
from PIL import Image
import skimage.data

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

def save(name, arr, box, size):
    img = Image.fromarray(arr).crop(box).resize(size, Image.LANCZOS)
    img.save(OUT / name)

save("astronaut.png", skimage.data.astronaut(), (96, 0, 416, 320), (128, 128))
save("coffee.png", skimage.data.coffee(), (100, 40, 500, 340), (160, 120))
save("chelsea.png", skimage.data.chelsea(), (80, 20, 380, 245), (128, 96))
