# Empty file - required for Python package
