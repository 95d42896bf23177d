"""Train a window-64 joint inpainter on the synthetic motion set and compare it with blending.

Run with ``python3 demos/inpaint_vs_blend.py``; about 5 minutes on one core.
"""

import time

from dancesynth.evaluation import compare_on_crops, format_table, junction_crops
from dancesynth.inpainter import Inpainter, InpainterConfig, InpainterHyper, train_inpainter
from dancesynth.music import generate_motion_set, generate_synthetic_corpus

corpus = generate_synthetic_corpus(0)
motion = generate_motion_set(1, corpus.catalog, n_clips=16)
crops = junction_crops(motion, 192)
print(f"{len(motion.clips)} clips, {len(crops)} junction windows of 192 frames")

cfg = InpainterConfig(window=64, embed_dim=24, hidden=8, codec_width=32)
hyper = InpainterHyper(epochs=60, batch=16, steps_per_epoch=8, lr=3e-3)
model = Inpainter(cfg, motion.clips[0].n_joints)
t0 = time.perf_counter()


def report(entry):
    if entry["epoch"] % 10 == 0:
        print(f"epoch {entry['epoch']:3d}  eval {entry['eval']:8.3f}  lr {entry['lr']:.1e}"
              f"  {time.perf_counter() - t0:5.0f} s")


train_inpainter(motion.clips, cfg, hyper, model=model, callback=report, branches=("joint",),
                junctions=motion.junctions)
# mean geodesic per masked frame and joint, radians
print(format_table(compare_on_crops(crops, model)))
