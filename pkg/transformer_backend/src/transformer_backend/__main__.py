import sys

from .serve import serve

if __name__ == "__main__":
    sys.exit(serve())
