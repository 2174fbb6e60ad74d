"""
PSNR and SSIM on simple cases
=============================
"""

import numpy as np

from sci_forge import psnr, ssim

a = np.zeros((64, 64))
print("PSNR of a 0.1 offset:", psnr(a, a + 0.1))
print("PSNR of identical frames:", psnr(a, a))

# SSIM uses an 11x11 Gaussian window and only scores fully covered pixels
rng = np.random.default_rng(0)
img = rng.random((64, 64))
for sigma in (0.01, 0.05, 0.2):
    noisy = np.clip(img + sigma * rng.standard_normal(img.shape), 0, 1)
    print(f"noise {sigma:.2f}: PSNR {psnr(img, noisy):6.2f} dB  SSIM {ssim(img, noisy):.3f}")

# Inverting contrast keeps the error bounded but breaks the structure term
print("SSIM of inverted image:", round(ssim(img, 1 - img), 3))
