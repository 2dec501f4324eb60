from solk.cli import main

raise SystemExit(main())
