# This file makes the 'exceptions' directory a Python package.
