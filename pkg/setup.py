"""Build script: compiles the optional fuzzy-match speedup extension.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed compile degrades to a warning, not an error.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/drkit/_speedups.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"warning: speedup extension skipped ({exc}); using pure-Python kernels", file=sys.stderr)

setup(ext_modules=ext_modules)
