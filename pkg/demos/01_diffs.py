#!/usr/bin/env python3
# Working with unified diffs: parse, apply, render, invert.

from xlr import diffkit

old_code = "a\nb\nc\n"

# A diff is hunks of context/add/remove lines against a before-state.
text = "@@ -2,1 +2,2 @@\n-b\n+B\n+b2\n"
diff = diffkit.parse_unified_diff(text)
print("parsed hunks:", len(diff.hunks))
for line in diff.hunks[0].lines:
    print(" ", line.kind, repr(line.text))

# Applying realizes the after-state. Context must match exactly (no fuzz).
new_code = diffkit.apply(old_code, diff)
print("after state:", repr(new_code))

# render() produces the canonical text form; parsing it gives the same diff back.
assert diffkit.parse_unified_diff(diffkit.render(diff)) == diff
print("canonical form:")
print(diffkit.render(diff))

# invert() swaps add/remove, so applying it to the after-state undoes the change.
assert diffkit.apply(new_code, diffkit.invert(diff)) == old_code
print("inverse apply restored the original")

# diff_texts() computes a fresh diff between two texts (zero context).
computed = diffkit.diff_texts("x\ny\n", "x\nz\n")
print("computed diff:")
print(diffkit.render(computed))

# changed_lines() is what featurization consumes.
added, removed = diffkit.changed_lines(diff)
print("added:", added, "removed:", removed)
