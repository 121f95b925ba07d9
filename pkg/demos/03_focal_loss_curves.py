"""How the focusing parameter reshapes the loss.

At gamma 0 the loss is plain (alpha-weighted) cross-entropy; raising gamma
suppresses the loss of well-classified pairs so training concentrates on
the hard ones. The table below is the per-sample loss of a single positive
pair as its predicted probability varies.
"""

from ergo import FocalConfig, Tensor, focal_loss

probabilities = [0.1, 0.3, 0.5, 0.7, 0.9, 0.99]
gammas = [0.0, 1.0, 2.0, 3.0]

header = "p_causal " + "".join(f"gamma={g:<8.0f}" for g in gammas)
print(header)
print("-" * len(header))
for p in probabilities:
    row = [f"{p:<9.2f}"]
    for gamma in gammas:
        loss = focal_loss(Tensor([[1 - p, p]]), ["positive"], FocalConfig(gamma=gamma, alpha=0.75))
        row.append(f"{loss.item():<14.5f}")
    print("".join(row))

print("\neach column is elementwise <= the one to its left; the easy samples")
print("(high p) vanish fastest as gamma grows")
