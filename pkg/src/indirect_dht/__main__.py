import sys

from indirect_dht.cli import main

sys.exit(main())
