import sys

from qsac.cli import main

sys.exit(main())
