// Wire types mirroring the session service's documented JSON payloads.
export {};
