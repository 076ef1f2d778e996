import sys

from ozmm.cli import main

sys.exit(main())
