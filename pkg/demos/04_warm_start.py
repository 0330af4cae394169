"""
Warm-starting from a handcrafted network
========================================

A resnet genotype is turned into architecture logits (+3 for selected ops,
-3 elsewhere), the supernet weights are pretrained for a few epochs, and the
search then tracks how far the parse drifts from the start.  With a zero
logit learning rate nothing moves, so the distance trace is flat and the
plateau rule stops the run.
"""
from ddarts import encode_handcrafted
from ddarts.alpha import genotype_to_alpha, parse_alpha
from ddarts.search import SearchConfig, oriented_textures, search

start = encode_handcrafted("resnet18")
alpha = genotype_to_alpha(start)
print("round trip is exact:", parse_alpha(alpha, "edge", 0.85) == start)

ds = oriented_textures(24, 2, 3, 8, seed=1)
cfg = SearchConfig(mode="dartopti", channels=3, batch_size=8, epochs=15, alpha_lr=0.0)
res = search(start, ds, cfg)
print(res.trace.to_csv())
print("stopped at epoch", res.stopped_epoch)
