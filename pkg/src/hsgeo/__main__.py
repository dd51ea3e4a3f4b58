import sys

from hsgeo.cli import main

sys.exit(main())
