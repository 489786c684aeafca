# %% [markdown]
# # Solving from a TOML file
#
# The same problems can be described with expressions and run through the
# command line.  The catalog ships worked examples with their oracles.

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

config = """
kind = "volterra"
domain = [[0, 1, 11]]
forcing = "1"
kernel = "x"
lipschitz = "1"
"""

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "problem.toml"
    path.write_text(config)
    out = subprocess.run([sys.executable, "-m", "bielecki", "solve", str(path)], capture_output=True, text=True)
    print(out.stdout)
    print(out.stderr)

# %%
out = subprocess.run([sys.executable, "-m", "bielecki", "catalog", "run", "all"], capture_output=True, text=True)
print(out.stdout)
