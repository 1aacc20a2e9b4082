#!/usr/bin/env python3
"""Walk through one multiply-accumulate sequence three ways.

Five image values stream in with five dictionary-encoded weights
(values at scale 10, so 26.7 is stored as 267). The direct MAC
multiplies as it goes; the two-phase schedule first piles image values
into per-bin registers without touching a multiplier, then multiplies
each bin total by its shared weight exactly once.
"""

from pasmconv import BinAccumulators, pas_accumulate, postpass_multiply

images = (267, 34, 48, 177, 61)
bin_index = (0, 1, 2, 3, 0)          # which dictionary slot each tap uses
weights = (17, 4, 13, 20)            # the shared-weight dictionary, stream order

print("== weight-shared MAC: multiply while streaming ==")
acc = 0
for v, b in zip(images, bin_index):
    acc += v * weights[b]
    print(f"  image {v:4d} * weight[{b}] {weights[b]:3d} -> running sum {acc}")
print(f"result: {acc}  (= {acc / 100:.2f} at scale 10)\n")

print("== phase 1: accumulate into bins, no multiplier ==")
bins = BinAccumulators(4)
for v, b in zip(images, bin_index):
    bins.add(v, b)
    print(f"  image {v:4d} -> bin {b}, bins now {list(bins)}")

same = pas_accumulate(zip(images, bin_index), 4)
assert list(same) == list(bins)

print("\n== phase 2: one multiply per bin ==")
total = 0
for b, (acc_v, w) in enumerate(zip(bins, weights)):
    total += acc_v * w
    print(f"  bin {b}: {acc_v:4d} * {w:3d} = {acc_v * w:5d} -> running sum {total}")
assert total == postpass_multiply(bins, weights) == acc
print(f"result: {total}  identical to the streaming MAC, "
      f"with {len(images)} adds + {len(weights)} multiplies instead of {len(images)} multiplies")
