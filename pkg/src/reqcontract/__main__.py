import sys

from reqcontract.cli import main

sys.exit(main())
