import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PERPETUA_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "perpetua._ckernels",
                    ["src/perpetua/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # keep rounding identical across machines
                    extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
