"""Deterministic synthetic video corpus."""

import numpy as np


def synthetic_video(n_frames=16, width=64, height=64, seed=7):
    """Textured background with two moving objects and a mid-clip lighting change.

    Returns a ``(n_frames, 3, height, width)`` uint8 array. Identical
    arguments always give identical bytes.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    phases = rng.uniform(0, 2 * np.pi, size=(3, 2))
    base = np.stack(
        [
            110
            + 40 * np.sin(2 * np.pi * xx / width + phases[j, 0])
            + 30 * np.cos(2 * np.pi * yy / height * 2 + phases[j, 1])
            for j in range(3)
        ]
    )
    disc_colour = np.array([230.0, 60.0, 40.0])
    box_colour = np.array([30.0, 90.0, 220.0])
    frames = []
    for n in range(n_frames):
        t = n / max(n_frames - 1, 1)
        img = base.copy()
        # background drifts slowly to the right
        img = np.roll(img, shift=n // 2, axis=2)
        cx, cy = 10 + 40 * t, 20 + 20 * np.sin(np.pi * t)
        disc = (xx - cx) ** 2 + (yy - cy) ** 2 <= 8.0**2
        img[:, disc] = disc_colour[:, None]
        bx, by = int(round(50 - 36 * t * t)), 40
        img[:, by : by + 12, max(bx, 0) : bx + 12] = box_colour[:, None, None]
        if n >= n_frames // 2:
            img = img * 0.85 + 20
        frames.append(img)
    return np.clip(np.rint(np.stack(frames)), 0, 255).astype(np.uint8)
