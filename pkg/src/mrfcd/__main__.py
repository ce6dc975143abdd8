import sys

from mrfcd.cli import main

sys.exit(main())
