# This file makes the 'api' directory a Python package.
