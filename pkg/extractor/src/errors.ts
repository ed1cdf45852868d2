export class CheckpointMissing extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CheckpointMissing";
  }
}

export class ClassMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ClassMismatch";
  }
}

export class InvalidSpec extends Error {
  constructor(message: string) {
    super(message);
    this.name = "InvalidSpec";
  }
}
