import sys

from almg.cli import main

sys.exit(main())
