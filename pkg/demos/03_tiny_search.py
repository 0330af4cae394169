"""
A search on a toy dataset
=========================

Every cell gets its own architecture table and optimizer.  The search runs a
few epochs on oriented textures, then the parsed genotype is retrained from
scratch.  Takes a little over a minute on one core.
"""
from ddarts.alpha import dominant_fraction
from ddarts.search import SearchConfig, metrics_csv, oriented_textures, search, train_discrete

ds = oriented_textures(128, n_classes=2, channels=3, size=8, seed=0)
cfg = SearchConfig(mode="ddarts", cells=4, channels=4, epochs=8, alpha_lr=0.3, seed=0)

res = search(None, ds, cfg)
print(metrics_csv(res.log))

# how decided are the logits?  fraction with sigmoid above 0.9 / below 0.1
print("dominant fraction", dominant_fraction(res.state.alpha))

g = res.genotype
for i, cell in enumerate(g.cells):
    active = [(e.from_node, e.to_node, [str(o) for o in e.ops]) for e in cell.edges if e.ops]
    print(i, cell.kind, active)

_, hist = train_discrete(g, res.state.train, res.state.val, epochs=12, channels=4)
print("retrained val top-1 per epoch", [round(h[2], 3) for h in hist])
